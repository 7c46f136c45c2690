// depthbench: generate data, train and evaluate model variants, count
// parameters, and build comparison tables.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error (bad flags, unknown
// variant or config key).

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "depthbench/depthbench.hpp"

namespace fs = std::filesystem;
using namespace depthbench;
using namespace depthbench::bench;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  bool deterministic = true;
};

// Flags that override the config file when given.
struct ExperimentFlags {
  std::string task;
  std::string variant;
  std::optional<std::size_t> steps, batch_size, input_size, count, test_count;
  std::optional<double> lr;
  std::string manifest;
  std::vector<std::string> set;
  bool no_checkpoint = false;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f) {
  cmd->add_option("--task", f.task, "mono or stereo")->check(CLI::IsMember({"mono", "stereo"}));
  cmd->add_option("--variant", f.variant, "mono: 4-1-4, 3-1-3, 3-1-3-swish; stereo SPN: none, 1, 2, 4, 8");
  cmd->add_option("--steps", f.steps, "optimizer steps");
  cmd->add_option("--lr", f.lr, "learning rate");
  cmd->add_option("--batch-size", f.batch_size, "mini-batch size");
  cmd->add_option("--input-size", f.input_size, "mono input height = width");
  cmd->add_option("--count", f.count, "synthetic training samples");
  cmd->add_option("--test-count", f.test_count, "synthetic held-out samples");
  cmd->add_option("--manifest", f.manifest, "load data from a manifest instead of generating it");
  cmd->add_option("--set", f.set, "override any config key: section.key=value (repeatable)");
}

ExperimentConfig resolve_config(const Globals& g, const ExperimentFlags& f) {
  ExperimentConfig cfg = g.config.empty() ? default_config(f.task == "stereo" ? TaskKind::stereo : TaskKind::mono)
                                          : parse_config(data::read_file(g.config));
  if (!f.task.empty() && data::parse_task_kind(f.task) != cfg.task) {
    const auto task = data::parse_task_kind(f.task);
    if (!g.config.empty()) throw ConfigError("--task " + f.task + " contradicts the config file");
    cfg = default_config(task);
  }
  if (!f.variant.empty()) cfg.variant = f.variant;
  if (f.steps) cfg.train.optimizer.max_steps = *f.steps;
  if (f.lr) cfg.train.optimizer.lr = *f.lr;
  if (f.batch_size) cfg.train.optimizer.batch_size = *f.batch_size;
  if (f.input_size) cfg.input_size = *f.input_size;
  if (f.count) cfg.data.count = *f.count;
  if (f.test_count) cfg.data.test_count = *f.test_count;
  if (!f.manifest.empty()) {
    cfg.data.source = "manifest";
    cfg.data.manifest = f.manifest;
  }
  for (const auto& kv : f.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + kv + "'");
    set_option(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.no_checkpoint) cfg.save_checkpoint = false;
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out.empty()) cfg.out_dir = g.out;
  cfg.deterministic = g.deterministic;
  cfg.validate();
  return cfg;
}

void print_summary(const ExperimentReport& r) {
  std::cout << "experiment " << r.id << " (" << data::to_string(r.task) << ", variant " << r.variant << ")\n"
            << "  parameters: " << r.params.trainable << " trainable, " << r.params.non_trainable
            << " non-trainable, " << r.params.total << " total\n";
  for (const auto& m : r.macs)
    std::cout << "  MACs " << m.stage << ": " << m.cumulative << " (+" << m.incremental << ")\n";
  for (const auto& m : r.metrics.metrics)
    std::cout << "  " << m.name << ": mean " << fmt9(m.stats.mean) << " median " << fmt9(m.stats.median) << " [q25 "
              << fmt9(m.stats.q25) << ", q75 " << fmt9(m.stats.q75) << "]\n";
  for (const auto& [name, a] : r.baselines)
    std::cout << "  baseline " << name << ": " << r.primary_metric << " mean " << fmt9(a.mean) << "\n";
  if (r.published)
    std::cout << "  published reference: " << r.published->parameters << " parameters, " << r.published->metric_name
              << " " << r.published->metric << " (full-dataset training)\n";
}

// ------------------------------------------------------------ subcommands

int cmd_gen_data(const Globals& g, const GenDataOptions& base) {
  GenDataOptions opt = base;
  if (g.seed) opt.seed = *g.seed;
  const fs::path dir = g.out.empty() ? fs::path("data") / data::to_string(opt.task) : fs::path(g.out);
  const auto manifest = generate_dataset(opt, dir);
  std::cout << "wrote " << opt.count << " " << data::to_string(opt.task) << " samples; manifest " << manifest.string()
            << "\n";
  return 0;
}

int cmd_train(const Globals& g, const ExperimentFlags& f) {
  const auto cfg = resolve_config(g, f);
  const auto out = run_experiment(cfg, &std::clog);
  print_summary(out.report);
  std::cout << "  report: " << (out.directory / "report.json").string() << "\n";
  return 0;
}

int cmd_eval(const Globals& g, const ExperimentFlags& f, const std::string& checkpoint) {
  const std::string bytes = data::read_file(checkpoint);
  ExperimentFlags flags = f;
  if (flags.task.empty()) flags.task = train::read_checkpoint_header(bytes).at("task").get<std::string>();
  ExperimentConfig cfg = resolve_config(g, flags);
  const auto r = evaluate_checkpoint(bytes, cfg);
  print_summary(r);
  if (!g.out.empty()) {
    const fs::path dir = fs::path(g.out) / r.id;
    data::write_file_atomic(dir / "report.json", emit_report(r, "json"));
    data::write_file_atomic(dir / "samples.csv", emit_report(r, "csv"));
    std::cout << "  report: " << (dir / "report.json").string() << "\n";
  }
  return 0;
}

int cmd_count_params(const std::string& task, bool search, const std::string& format) {
  Json rows = Json::array();
  auto add = [&](const std::string& t, const std::string& variant, const nn::ParamCounts& c,
                 const std::optional<PublishedReference>& pub, std::uint64_t macs) {
    rows.push_back({{"task", t},
                    {"variant", variant},
                    {"trainable", c.trainable},
                    {"non_trainable", c.non_trainable},
                    {"total", c.total},
                    {"published", pub ? Json(pub->parameters) : Json(nullptr)},
                    {"macs", macs}});
  };
  if (task.empty() || task == "mono")
    for (const auto& v : mono_matrix()) {
      auto cfg = mono_config(parse_mono_variant(v));
      mono::MonoDepthModel model(cfg);
      add("mono", v, nn::count_parameters(model.params()), published_mono(parse_mono_variant(v)),
          mono::count_flops(model, 1, cfg.input_size, cfg.input_size).total());
    }
  if (task.empty() || task == "stereo")
    for (const auto& v : stereo_matrix()) {
      stereo::AnyNetConfig cfg;
      cfg.max_disparity = 32;
      cfg.spn_channels = parse_spn_variant(v);
      stereo::AnyNet model(cfg);
      add("stereo", v, nn::count_parameters(model.params()), published_stereo(cfg.spn_channels),
          stereo::count_flops(model, 1, 48, 96, 4).total());
    }
  Json search_rows = Json::array();
  if (search)
    for (const auto& c : mono_architecture_search())
      search_rows.push_back({{"skip_connections", c.skip_connections},
                             {"head_kernel", c.head_kernel},
                             {"counted", c.count_running_stats ? "total" : "trainable"},
                             {"large", c.large},
                             {"small", c.small},
                             {"error", c.error}});

  if (format == "json") {
    Json j{{"variants", rows}};
    if (search) j["search"] = search_rows;
    std::cout << j.dump(2) << "\n";
  } else if (format == "csv") {
    std::cout << "task,variant,trainable,non_trainable,total,published,macs\n";
    for (const auto& r : rows)
      std::cout << r["task"].get<std::string>() << "," << r["variant"].get<std::string>() << "," << r["trainable"] << ","
                << r["non_trainable"] << "," << r["total"] << "," << (r["published"].is_null() ? "" : r["published"].dump())
                << "," << r["macs"] << "\n";
    if (search) {
      std::cout << "\nskip_connections,head_kernel,counted,large,small,error\n";
      for (const auto& s : search_rows)
        std::cout << s["skip_connections"] << "," << s["head_kernel"] << "," << s["counted"].get<std::string>() << ","
                  << s["large"] << "," << s["small"] << "," << s["error"] << "\n";
    }
  } else {
    std::printf("%-7s %-12s %10s %14s %10s %10s %14s\n", "task", "variant", "trainable", "non-trainable", "total",
                "published", "MACs");
    for (const auto& r : rows)
      std::printf("%-7s %-12s %10llu %14llu %10llu %10s %14llu\n", r["task"].get<std::string>().c_str(),
                  r["variant"].get<std::string>().c_str(), r["trainable"].get<unsigned long long>(),
                  r["non_trainable"].get<unsigned long long>(), r["total"].get<unsigned long long>(),
                  r["published"].is_null() ? "-" : r["published"].dump().c_str(), r["macs"].get<unsigned long long>());
    if (search) {
      std::printf("\nmono architecture search (scored against published 4-1-4 / 3-1-3 counts)\n");
      std::printf("%-6s %-5s %-10s %10s %10s %8s\n", "skip", "head", "counted", "4-1-4", "3-1-3", "error");
      for (const auto& s : search_rows)
        std::printf("%-6s %-5s %-10s %10llu %10llu %8.0f\n", s["skip_connections"].get<bool>() ? "on" : "off",
                    (std::to_string(s["head_kernel"].get<int>()) + "x" + std::to_string(s["head_kernel"].get<int>())).c_str(),
                    s["counted"].get<std::string>().c_str(), s["large"].get<unsigned long long>(),
                    s["small"].get<unsigned long long>(), s["error"].get<double>());
    }
  }
  return 0;
}

int cmd_compare(const Globals& g, const std::vector<std::string>& paths) {
  std::vector<ExperimentReport> reports;
  for (const auto& p : paths) reports.push_back(parse_report(data::read_file(p)));
  const auto c = compare_models(reports);
  std::cout << comparison_table(c);
  if (!g.out.empty()) {
    data::write_file_atomic(fs::path(g.out) / "comparison.csv", comparison_csv(c));
    data::write_file_atomic(fs::path(g.out) / "comparison.json", comparison_json(c).dump(2) + "\n");
    std::cout << "wrote " << (fs::path(g.out) / "comparison.csv").string() << " and comparison.json\n";
  }
  return 0;
}

int cmd_report(const std::string& path, const std::string& format) {
  std::cout << emit_report(parse_report(data::read_file(path)), format);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"depthbench: desk-scale depth-estimation benchmark"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "seed (experiments: init + shuffle; gen-data: scene seed)");
  app.add_option("--config", g.config, "experiment config file (INI)")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "output directory");
  app.add_flag("--deterministic,!--no-deterministic", g.deterministic,
               "reference mode (default on; every run is single-threaded and seeded)");

  GenDataOptions gen;
  std::string gen_task = "stereo";
  auto* gen_cmd = app.add_subcommand("gen-data", "write a synthetic dataset (PPM/PFM/PGM + manifest)");
  gen_cmd->add_option("--task", gen_task, "mono or stereo")->check(CLI::IsMember({"mono", "stereo"}));
  gen_cmd->add_option("--count", gen.count, "number of samples");
  gen_cmd->add_option("--height", gen.height, "image height");
  gen_cmd->add_option("--width", gen.width, "image width");
  gen_cmd->add_option("--max-disp", gen.max_disp, "stereo disparity range (< width / 4)");

  ExperimentFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "train one variant and write its report");
  add_experiment_flags(train_cmd, train_flags);
  train_cmd->add_flag("--no-checkpoint", train_flags.no_checkpoint, "do not write model.ckpt");

  ExperimentFlags eval_flags;
  std::string checkpoint;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the held-out split");
  eval_cmd->add_option("--checkpoint", checkpoint, "model.ckpt written by train")->required()->check(CLI::ExistingFile);
  add_experiment_flags(eval_cmd, eval_flags);

  std::string count_task, count_format = "text";
  bool search = false;
  auto* count_cmd = app.add_subcommand("count-params", "parameter and MAC counts of every variant");
  count_cmd->add_option("--task", count_task, "restrict to mono or stereo")->check(CLI::IsMember({"mono", "stereo"}));
  count_cmd->add_flag("--search", search, "also print the mono architecture search");
  count_cmd->add_option("--format", count_format, "text, csv or json")->check(CLI::IsMember({"text", "csv", "json"}));

  std::vector<std::string> compare_paths;
  auto* compare_cmd = app.add_subcommand("compare", "comparison table of two or more reports of one task");
  compare_cmd->add_option("reports", compare_paths, "report.json files")->required()->check(CLI::ExistingFile);

  std::string report_path, report_format = "json";
  auto* report_cmd = app.add_subcommand("report", "re-emit a report as JSON or per-sample CSV");
  report_cmd->add_option("report", report_path, "report.json")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--format", report_format, "json or csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen_cmd) {
      gen.task = data::parse_task_kind(gen_task);
      if (gen.task == TaskKind::mono && gen_cmd->count("--height") == 0) gen.height = 64;
      if (gen.task == TaskKind::mono && gen_cmd->count("--width") == 0) gen.width = 64;
      return cmd_gen_data(g, gen);
    }
    if (*train_cmd) return cmd_train(g, train_flags);
    if (*eval_cmd) return cmd_eval(g, eval_flags, checkpoint);
    if (*count_cmd) return cmd_count_params(count_task, search, count_format);
    if (*compare_cmd) return cmd_compare(g, compare_paths);
    if (*report_cmd) return cmd_report(report_path, report_format);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
