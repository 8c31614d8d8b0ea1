// stcis: command-line front end for the class-incremental self-training lab.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stcis/config.hpp"
#include "stcis/continual.hpp"
#include "stcis/error.hpp"
#include "stcis/io.hpp"
#include "stcis/metrics.hpp"
#include "stcis/pseudo.hpp"
#include "stcis/relatedness.hpp"

namespace fs = std::filesystem;
using namespace stcis;

namespace {

// Flags shared by run, generate and eval. Only flags the user actually gave
// override the config file.
struct ConfigFlags {
  std::string config_path;
  std::string preset;
  std::string partition;
  std::string setting;
  std::string methods;
  std::string seeds;
  double lambda = 0.0;
  double aux_fraction = 0.0;
  int aux_pool_size = 0;
  double hue_shift = 0.0;
  int self_train_epochs = 0;
  double first_lr = 0.0;
  double later_lr = 0.0;
  int first_epochs = 0;
  int later_epochs = 0;
  std::size_t batch_pixels = 0;
  int images_per_session = 0;
  int test_images = 0;
  std::string out;
  std::string sweep;
  bool dump_probes = false;
  bool ms_everywhere = false;
  bool zero_init_joint = false;
  bool exclude_background = false;

  std::map<std::string, CLI::Option*> opts;

  void add_scenario(CLI::App& app) {
    opts["config"] = app.add_option("--config", config_path, "JSON config file");
    opts["preset"] = app.add_option("--preset", preset, "Scenario preset (4-1, 3-2, 3-1x2)");
    opts["partition"] =
        app.add_option("--partition", partition, "Explicit sessions, e.g. \"1,2,3;4;5\"");
    opts["setting"] = app.add_option("--setting", setting, "disjoint or overlapped");
    opts["images-per-session"] = app.add_option("--images-per-session", images_per_session);
    opts["test-images"] = app.add_option("--test-images", test_images);
  }

  void add_training(CLI::App& app) {
    opts["methods"] = app.add_option("--methods", methods, "Comma-separated methods");
    opts["seeds"] = app.add_option("--seeds", seeds, "Seeds: 1..5 or 1,2,3");
    opts["lambda"] = app.add_option("--lambda", lambda, "Self-entropy weight");
    opts["aux-fraction"] = app.add_option("--aux-fraction", aux_fraction);
    opts["aux-pool-size"] = app.add_option("--aux-pool-size", aux_pool_size);
    opts["hue-shift"] = app.add_option("--hue-shift", hue_shift, "Auxiliary hue rotation (turns)");
    opts["self-train-epochs"] = app.add_option("--self-train-epochs", self_train_epochs);
    opts["first-lr"] = app.add_option("--first-lr", first_lr);
    opts["later-lr"] = app.add_option("--later-lr", later_lr);
    opts["first-epochs"] = app.add_option("--first-epochs", first_epochs);
    opts["later-epochs"] = app.add_option("--later-epochs", later_epochs);
    opts["batch-pixels"] = app.add_option("--batch-pixels", batch_pixels);
    opts["sweep"] = app.add_option("--sweep", sweep,
                                   "Ablation axis: lambda, aux_fraction, self_train_epochs or hue_shift, "
                                   "optionally with values (lambda=0.5,1)");
    opts["out"] = app.add_option("--out", out, "Output root (default $STCIS_OUT, then ./runs)");
    opts["dump-probes"] = app.add_flag("--dump-probes", dump_probes, "Write probe predictions");
    opts["ms-everywhere"] = app.add_flag("--ms-everywhere", ms_everywhere);
    opts["zero-init-joint"] = app.add_flag("--zero-init-joint", zero_init_joint);
    opts["exclude-background"] = app.add_flag("--exclude-background", exclude_background);
  }

  bool given(const std::string& name) const {
    const auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }

  RunConfig resolve() const {
    RunConfig c = given("config") ? load_config(config_path) : RunConfig{};
    if (given("preset")) {
      c.preset = preset;
      c.partition.clear();
    }
    if (given("partition")) {
      c.preset.clear();
      c.partition = parse_partition(partition);
    }
    if (given("setting")) {
      const auto s = parse_setting(setting);
      if (!s) throw ConfigError("--setting: expected disjoint or overlapped");
      c.setting = *s;
    }
    if (given("images-per-session")) c.images_per_session = images_per_session;
    if (given("test-images")) c.test_images = test_images;
    if (given("methods")) c.methods = parse_method_list(methods);
    if (given("seeds")) c.seeds = parse_seed_list(seeds);
    if (given("lambda")) c.lambda = lambda;
    if (given("aux-fraction")) c.aux_fraction = aux_fraction;
    if (given("aux-pool-size")) c.aux_pool_size = aux_pool_size;
    if (given("hue-shift")) c.hue_shift = hue_shift;
    if (given("self-train-epochs")) c.self_train_epochs = self_train_epochs;
    if (given("first-lr")) c.first_lr = first_lr;
    if (given("later-lr")) c.later_lr = later_lr;
    if (given("first-epochs")) c.first_epochs = first_epochs;
    if (given("later-epochs")) c.later_epochs = later_epochs;
    if (given("batch-pixels")) c.batch_pixels = batch_pixels;
    if (given("out")) c.output_dir = out;
    if (given("sweep")) apply_sweep_spec(sweep, c);
    if (given("dump-probes")) c.dump_probes = dump_probes;
    if (given("ms-everywhere")) c.ms_everywhere = ms_everywhere;
    if (given("zero-init-joint")) c.zero_init_joint = zero_init_joint;
    if (given("exclude-background")) c.include_background = !exclude_background;
    c.resolve();
    return c;
  }

  static std::vector<std::vector<ClassId>> parse_partition(const std::string& text) {
    std::vector<std::vector<ClassId>> out;
    std::stringstream sessions(text);
    std::string session;
    while (std::getline(sessions, session, ';')) {
      std::vector<ClassId> ids;
      std::stringstream items(session);
      std::string item;
      while (std::getline(items, item, ',')) {
        try {
          std::size_t used = 0;
          ids.push_back(std::stoi(item, &used));
          if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
          throw ConfigError("--partition: bad class id '" + item + "'");
        }
      }
      out.push_back(std::move(ids));
    }
    return out;
  }
};

std::string method_slug(Method m) {
  std::string s(to_string(m));
  std::transform(s.begin(), s.end(), s.begin(), [](char ch) {
    return ch == '+' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  });
  return s;
}

std::map<ClassId, std::string> class_names(const GeneratorConfig& gen) {
  std::map<ClassId, std::string> names{{kBackground, "background"}};
  for (const auto& c : gen.classes) names[c.id] = c.name;
  return names;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string numbered(int index, const char* suffix) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%03d%s", index, suffix);
  return buf;
}

std::optional<double> median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::string cell(std::optional<double> v) {
  const std::string s = format_percent(v);
  return s.empty() ? "-" : s;
}

void write_session_files(const fs::path& dir, const SessionResult& result,
                         const std::map<ClassId, std::string>& names) {
  const std::string stem = "session-" + std::to_string(result.session);
  save_checkpoint(result.checkpoint, dir / (stem + ".ckpt.json"));
  std::ofstream csv(dir / (stem + ".csv"), std::ios::binary);
  write_iou_csv(csv, result.report, names);
  if (!csv) throw std::runtime_error("cannot write metrics for " + stem);
}

void dump_probes(const fs::path& dir, const RunRecord& record, int count) {
  const auto probes = build_test_set(record.spec, record.generator, record.spec.sessions());
  const fs::path probe_dir = dir / "probes";
  fs::create_directories(probe_dir);
  const int n = std::min<int>(count, static_cast<int>(probes.size()));
  for (int i = 0; i < n; ++i) {
    const auto& item = probes[static_cast<std::size_t>(i)];
    write_ppm(item.image, probe_dir / numbered(i, "-input.ppm"));
    write_ppm(render_labels(item.ground_truth), probe_dir / numbered(i, "-truth.ppm"));
    for (const auto& s : record.sessions) {
      const LabelMap pred = pseudo_label(s.checkpoint, item.image).label_map();
      write_ppm(render_labels(pred),
                probe_dir / numbered(i, ("-session-" + std::to_string(s.session) + ".ppm").c_str()));
    }
  }
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

int cmd_run(const ConfigFlags& flags) {
  const RunConfig config = flags.resolve();
  const fs::path root = resolve_output_root(config.output_dir) / config.scenario_name();
  fs::create_directories(root);
  const GeneratorConfig gen = config.generator();
  const auto names = class_names(gen);

  // One point per sweep value, or the config itself.
  struct Point {
    std::string label;  // "" or "lambda=0.5"
    std::string dir;    // "" or "lambda-0.5"
    RunConfig config;
  };
  std::vector<Point> points;
  if (config.sweep_axis.empty()) {
    points.push_back({"", "", config});
  } else {
    for (const double v : config.sweep_values)
      points.push_back({config.sweep_axis + "=" + format_value(v), config.sweep_axis + "-" + format_value(v),
                        config.at_sweep_point(v)});
  }

  struct Row {
    std::string label;
    std::vector<double> old_g, new_g, all;
  };
  std::vector<Row> rows;
  for (const Method m : config.methods)
    for (const auto& p : points)
      rows.push_back({std::string(to_string(m)) + (p.label.empty() ? "" : " " + p.label), {}, {}, {}});

  for (const std::uint64_t seed : config.seeds) {
    PhaseCache cache;  // shared by the methods of one seed
    const ScenarioSpec spec = config.scenario(seed);
    std::size_t r = 0;
    for (const Method m : config.methods) {
      for (const auto& point : points) {
        Row& row = rows[r++];
        const auto start = std::chrono::steady_clock::now();
        const RunRecord record = run_scenario(spec, gen, point.config.method_config(m), &cache);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        fs::path dir = root / method_slug(m);
        if (!point.dir.empty()) dir /= point.dir;
        dir /= "seed-" + std::to_string(seed);
        fs::create_directories(dir);
        RunConfig echo = point.config;
        echo.methods = {m};
        echo.seeds = {seed};
        write_text(dir / "config.json", config_to_json(echo));
        for (const auto& s : record.sessions) write_session_files(dir, s, names);
        {
          std::ostringstream t;
          t << "{\n";
          for (const auto& [phase, sec] : record.phase_seconds) t << "  \"" << phase << "\": " << sec << ",\n";
          t << "  \"total\": " << secs << "\n}\n";
          write_text(dir / "timing.json", t.str());
        }
        if (config.dump_probes) dump_probes(dir, record, config.probe_images);

        const IoUReport& rep = record.final_session().report;
        for (const auto& [name, v] : rep.group_miou) {
          if (!v) continue;
          if (name == "old") row.old_g.push_back(*v);
          if (name == "new") row.new_g.push_back(*v);
        }
        if (rep.overall) row.all.push_back(*rep.overall);
        std::cerr << "[" << config.scenario_name() << "] " << row.label << " seed " << seed << ": all "
                  << cell(rep.overall) << " (" << static_cast<int>(secs + 0.5) << "s)\n";
      }
    }
  }

  int width = 10;
  for (const auto& row : rows) width = std::max(width, static_cast<int>(row.label.size()));
  std::ostringstream table;
  char line[256];
  std::snprintf(line, sizeof line, "%-*s %6s %6s %6s\n", width, "method", "old", "new", "all");
  table << line;
  std::ostringstream csv;
  csv << "method,old,new,all,seeds\n";
  for (const auto& row : rows) {
    const auto o = median(row.old_g), n = median(row.new_g), a = median(row.all);
    std::snprintf(line, sizeof line, "%-*s %6s %6s %6s\n", width, row.label.c_str(), cell(o).c_str(),
                  cell(n).c_str(), cell(a).c_str());
    table << line;
    csv << row.label << ',' << format_percent(o) << ',' << format_percent(n) << ',' << format_percent(a)
        << ',' << config.seeds.size() << '\n';
  }
  write_text(root / "summary.csv", csv.str());
  std::cout << "scenario " << config.scenario_name() << " (" << to_string(config.setting)
            << "), median mIoU (%) over " << config.seeds.size() << " seed(s)\n"
            << table.str();
  return 0;
}

int cmd_generate(const ConfigFlags& flags, const std::string& out_dir, int aux_count) {
  const RunConfig config = flags.resolve();
  const fs::path root = out_dir.empty()
                            ? resolve_output_root(config.output_dir) / (config.scenario_name() + "-data")
                            : fs::path(out_dir);
  const GeneratorConfig gen = config.generator();
  const ScenarioSpec spec = config.scenario(config.seeds.front());
  const auto sessions = build_sessions(spec, gen);
  const auto dump_items = [](const fs::path& dir, const std::vector<SessionItem>& items) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < items.size(); ++i) {
      const int k = static_cast<int>(i);
      write_ppm(items[i].image, dir / numbered(k, ".ppm"));
      write_label_file(items[i].labels, dir / numbered(k, ".labels"));
      write_label_file(items[i].ground_truth, dir / numbered(k, ".gt.labels"));
    }
  };
  for (const auto& s : sessions) dump_items(root / ("session-" + std::to_string(s.index)), s.items);
  dump_items(root / "test", build_test_set(spec, gen, spec.sessions()));
  if (aux_count > 0) {
    GeneratorConfig aux_gen = gen;
    aux_gen.seed = derive_seed(spec.seed, streams::kAuxPool);
    const auto pool = build_aux_pool(aux_gen, aux_count, AuxShift{config.hue_shift, config.shape_vocabulary});
    fs::create_directories(root / "aux");
    for (std::size_t i = 0; i < pool.images.size(); ++i)
      write_ppm(pool.images[i], root / "aux" / numbered(static_cast<int>(i), ".ppm"));
  }
  std::cout << "wrote " << sessions.size() << " session(s) to " << root.string() << "\n";
  return 0;
}

int cmd_eval(const ConfigFlags& flags, const std::string& checkpoint, int session,
             const std::string& predict_dir, const std::string& out_dir) {
  const ModelParams params = load_checkpoint(checkpoint);
  if (!predict_dir.empty()) {
    if (out_dir.empty()) throw ConfigError("--predict-dir needs --out");
    const fs::path out(out_dir);
    fs::create_directories(out);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(predict_dir))
      if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw LoadError("no .ppm images in " + predict_dir);
    for (const auto& f : files) {
      const auto pseudo = pseudo_label(params, read_ppm(f));
      const std::string stem = f.stem().string();
      write_label_file(pseudo.label_map(), out / (stem + ".labels"));
      write_confidence_file(pseudo.h, pseudo.w, pseudo.confidence, out / (stem + ".conf"));
    }
    std::cout << "wrote " << files.size() << " prediction(s) to " << out.string() << "\n";
    return 0;
  }
  const RunConfig config = flags.resolve();
  const ScenarioSpec spec = config.scenario(config.seeds.front());
  const int t = session > 0 ? session : spec.sessions();
  if (t > spec.sessions()) throw ConfigError("--session beyond the scenario's sessions");
  const GeneratorConfig gen = config.generator();
  const auto test_set = build_test_set(spec, gen, t);
  const IoUReport report = evaluate(params, test_set, report_groups(spec, t), config.include_background);
  write_iou_csv(std::cout, report, class_names(gen));
  return 0;
}

int cmd_fuse(const std::vector<std::string>& files, const std::string& mode_name,
             const std::string& out_path) {
  FusionMode mode;
  if (mode_name == "naive")
    mode = FusionMode::Naive;
  else if (mode_name == "cr")
    mode = FusionMode::ConflictReduction;
  else
    throw ConfigError("--mode: expected naive or cr");
  const PseudoLabelMap old_map = read_pseudo_label(files[0], files[1]);
  const PseudoLabelMap new_map = read_pseudo_label(files[2], files[3]);
  if (old_map.h != new_map.h || old_map.w != new_map.w)
    throw ContractViolation("label maps differ in size: " + std::to_string(old_map.h) + "x" +
                            std::to_string(old_map.w) + " vs " + std::to_string(new_map.h) + "x" +
                            std::to_string(new_map.w));
  write_label_file(fuse(old_map, new_map, mode), out_path);
  return 0;
}

int cmd_fd(const std::string& dir_a, const std::string& dir_b) {
  const auto load = [](const std::string& dir) {
    if (!fs::is_directory(dir)) throw LoadError("not a directory: " + dir);
    auto images = load_ppm_dir(dir);
    if (images.size() < 2) throw LoadError("need at least two .ppm images in " + dir);
    return images;
  };
  const auto a = load(dir_a);
  const auto b = load(dir_b);
  const auto pa = pool_features(a);
  const auto pb = pool_features(b);
  const double score = frechet_distance(fit_stats(pa), fit_stats(pb));
  char line[128];
  std::snprintf(line, sizeof line, "%.4f", score);
  std::cout << line << " (pool a: " << a.size() << " images, pool b: " << b.size() << " images)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-training for class-incremental segmentation on synthetic scenes"};
  app.require_subcommand(1);

  ConfigFlags run_flags;
  auto* run = app.add_subcommand("run", "Train and evaluate methods over seeds");
  run_flags.add_scenario(*run);
  run_flags.add_training(*run);

  ConfigFlags gen_flags;
  std::string gen_out;
  int aux_count = 0;
  auto* generate = app.add_subcommand("generate", "Dump a scenario's images and label files");
  gen_flags.add_scenario(*generate);
  gen_flags.opts["seeds"] = generate->add_option("--seed", gen_flags.seeds, "Scenario seed");
  gen_flags.opts["hue-shift"] = generate->add_option("--hue-shift", gen_flags.hue_shift);
  generate->add_option("--out", gen_out, "Output directory");
  generate->add_option("--aux", aux_count, "Also dump this many auxiliary images")->check(CLI::NonNegativeNumber);

  ConfigFlags eval_flags;
  std::string checkpoint, predict_dir, eval_out;
  int session = 0;
  auto* eval = app.add_subcommand("eval", "Score a checkpoint or dump its predictions");
  eval_flags.add_scenario(*eval);
  eval_flags.opts["seeds"] = eval->add_option("--seed", eval_flags.seeds, "Scenario seed");
  eval_flags.opts["exclude-background"] =
      eval->add_flag("--exclude-background", eval_flags.exclude_background);
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--session", session, "Session whose test set is used (default: last)");
  eval->add_option("--predict-dir", predict_dir, "Write label and confidence files for these PPMs");
  eval->add_option("--out", eval_out, "Directory for --predict-dir output");

  std::vector<std::string> fuse_files;
  std::string mode = "cr", fuse_out;
  auto* fuse_cmd = app.add_subcommand("fuse", "Fuse two pseudo-label maps");
  fuse_cmd->add_option("files", fuse_files, "old.labels old.conf new.labels new.conf")
      ->required()
      ->expected(4);
  fuse_cmd->add_option("--mode", mode, "naive or cr");
  fuse_cmd->add_option("--out", fuse_out, "Fused label file")->required();

  std::string fd_a, fd_b;
  auto* fd = app.add_subcommand("fd", "Frechet distance between two image directories");
  fd->add_option("pool_a", fd_a)->required();
  fd->add_option("pool_b", fd_b)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "stcis: error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*generate) return cmd_generate(gen_flags, gen_out, aux_count);
    if (*eval) return cmd_eval(eval_flags, checkpoint, session, predict_dir, eval_out);
    if (*fuse_cmd) return cmd_fuse(fuse_files, mode, fuse_out);
    if (*fd) return cmd_fd(fd_a, fd_b);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "stcis: error: " << msg << "\n";
    return 1;
  }
  return 1;
}
