// Command-line laboratory: dataset generation, meta-training, calibration
// audits, single episodes, randomized batches, and plot emission. One JSON
// config per experiment; flags override leaf keys via dotted paths.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "seels/confidence.hpp"
#include "seels/dataset.hpp"
#include "seels/meta_loss.hpp"
#include "seels/model_io.hpp"
#include "seels/numerics.hpp"
#include "seels/report.hpp"
#include "seels/runtime.hpp"
#include "seels/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace seels;

namespace {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

bool verbose() {
  const char* v = std::getenv("SEELS_LOG");
  return v && *v && std::string(v) != "0";
}

void log_line(const std::string& msg) {
  static std::mutex mu;
  if (!verbose()) return;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[seels] " << msg << "\n";
}

json default_config() {
  return json{
      {"seed", 0},
      {"out_dir", "out"},
      {"episodes", 50},
      {"jobs", 1},
      {"env",
       {{"name", "freeflyer"},
        {"scenario", 0},
        {"noise", "low"},
        {"cycle_scenarios", true}}},
      {"x0", json::array()},
      {"data", {{"path", "data.json"}, {"systems", 64}, {"steps", 50}}},
      {"model",
       {{"path", "model.json"},
        {"width", 32},
        {"layers", 2},
        {"feature_dim", 16}}},
      {"train",
       {{"iterations", 1500},
        {"learning_rate", 3e-4},
        {"batch_size", 8},
        {"alpha_orth", 0.0},
        {"alpha_beta", 0.0}}},
      {"calibrate",
       {{"d", 8}, {"sigma", 1.0}, {"trials", 500}, {"horizon", 200},
        {"delta_i", 0.05}}},
      {"seels",
       {{"delta", 0.1},
        {"samples_m", 500},
        {"baseline", false},
        {"update_with_reach_data", false},
        {"fallback_between_phases", false}}},
  };
}

// Sets a dotted-path leaf, parsing the value as JSON when possible.
void apply_override(json& cfg, const std::string& expr) {
  const auto eq = expr.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like key.path=value: " + expr);
  const std::string path = expr.substr(0, eq);
  const std::string raw = expr.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;  // plain string
  }
  json* node = &cfg;
  std::istringstream is(path);
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(is, key, '.')) keys.push_back(key);
  if (keys.empty()) throw ConfigError("empty override path");
  for (size_t i = 0; i + 1 < keys.size(); ++i) node = &(*node)[keys[i]];
  (*node)[keys.back()] = value;
}

json load_config(const std::string& path, const std::vector<std::string>& sets) {
  json cfg = default_config();
  if (!path.empty()) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    json user;
    try {
      f >> user;
    } catch (const json::parse_error& e) {
      throw ConfigError("config parse error: " + std::string(e.what()));
    }
    cfg.merge_patch(user);
  }
  for (const auto& s : sets) apply_override(cfg, s);
  return cfg;
}

std::unique_ptr<Env> build_env(const json& cfg) {
  const json& e = cfg.at("env");
  const std::string name = e.at("name");
  if (name == "freeflyer") {
    const std::string noise = e.value("noise", "low");
    if (noise != "low" && noise != "high")
      throw ConfigError("env.noise must be low or high");
    return std::make_unique<FreeFlyerEnv>(
        e.value("scenario", 0),
        noise == "low" ? FreeFlyerEnv::Noise::Low : FreeFlyerEnv::Noise::High);
  }
  if (name == "manipulator")
    return std::make_unique<ManipulatorEnv>(e.value("scenario", 0));
  throw ConfigError("unknown env.name: " + name);
}

Eigen::VectorXd episode_x0(const json& cfg, const Env& env) {
  const json& arr = cfg.at("x0");
  if (!arr.empty()) {
    if (static_cast<int>(arr.size()) != env.spec().state_dim)
      throw ConfigError("x0 has wrong dimension");
    Eigen::VectorXd x(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) x[static_cast<int>(i)] = arr[i];
    return x;
  }
  if (cfg.at("env").at("name") == "freeflyer") {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(6);
    x[0] = 0.45;
    x[1] = 0.45;
    return x;
  }
  return env.spec().init_box.center();
}

SeelsConfig seels_config_from(const json& cfg) {
  const std::string name = cfg.at("env").at("name");
  SeelsConfig sc = name == "manipulator" ? SeelsConfig::manipulator_defaults()
                                         : SeelsConfig::freeflyer_defaults();
  const json& s = cfg.at("seels");
  sc.delta = s.value("delta", sc.delta);
  sc.samples_m = s.value("samples_m", sc.samples_m);
  sc.n_reach_min = s.value("n_reach_min", sc.n_reach_min);
  sc.n_reach_max = s.value("n_reach_max", sc.n_reach_max);
  sc.n_info = s.value("n_info", sc.n_info);
  sc.max_phases = s.value("max_phases", sc.max_phases);
  sc.alpha_info = s.value("alpha_info", sc.alpha_info);
  sc.baseline_mean_equivalent = s.value("baseline", false);
  sc.update_with_reach_data = s.value("update_with_reach_data", false);
  sc.fallback_between_phases = s.value("fallback_between_phases", false);
  return sc;
}

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
  Eigen::VectorXd v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v[static_cast<int>(i)] = a[i];
  return v;
}

void save_dataset(const MetaDataset& data, const std::string& path) {
  json j;
  j["format"] = "seels-dataset";
  j["version"] = 1;
  j["system_id"] = data.system_id;
  json trajs = json::array();
  for (const auto& traj : data.trajectories) {
    json t = json::array();
    for (const auto& rec : traj)
      t.push_back({{"x", vec_to_json(rec.x)},
                   {"u", vec_to_json(rec.u)},
                   {"x_next", vec_to_json(rec.x_next)}});
    trajs.push_back(std::move(t));
  }
  j["trajectories"] = std::move(trajs);
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write dataset: " + path);
  f << j.dump();
}

MetaDataset load_dataset(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open dataset: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("dataset parse error: " + std::string(e.what()));
  }
  if (j.value("format", "") != "seels-dataset")
    throw ConfigError("not a dataset file: " + path);
  MetaDataset data;
  data.system_id = j.at("system_id").get<std::vector<int>>();
  for (const auto& t : j.at("trajectories")) {
    Trajectory traj;
    for (const auto& rec : t)
      traj.push_back({vec_from_json(rec.at("x")), vec_from_json(rec.at("u")),
                      vec_from_json(rec.at("x_next"))});
    data.trajectories.push_back(std::move(traj));
  }
  return data;
}

int cmd_gen_data(const json& cfg) {
  std::unique_ptr<Env> env = build_env(cfg);
  RngStream rng(cfg.at("seed").get<std::uint64_t>(), 11);
  const int systems = cfg.at("data").at("systems");
  const int steps = cfg.at("data").at("steps");
  log_line("generating dataset: " + std::to_string(systems) + " systems x " +
           std::to_string(steps) + " steps");
  MetaDataset data = generate_dataset(*env, systems, steps, rng);
  save_dataset(data, cfg.at("data").at("path"));
  std::cout << "wrote " << cfg.at("data").at("path").get<std::string>() << " ("
            << data.trajectories.size() << " trajectories)\n";
  return 0;
}

int cmd_meta_train(const json& cfg) {
  std::unique_ptr<Env> env = build_env(cfg);
  MetaDataset data = load_dataset(cfg.at("data").at("path"));
  const EnvSpec& spec = env->spec();
  const json& m = cfg.at("model");
  const json& t = cfg.at("train");

  RngStream rng(cfg.at("seed").get<std::uint64_t>(), 13);
  TrainableModel init = TrainableModel::init(
      spec.state_dim, spec.control_dim, m.at("width"), m.at("layers"),
      m.at("feature_dim"), spec.sigma, rng);
  RegConfig regs;
  regs.alpha_orth = t.at("alpha_orth");
  regs.alpha_beta = t.at("alpha_beta");
  OptConfig opt;
  opt.iterations = t.at("iterations");
  opt.learning_rate = t.at("learning_rate");
  opt.batch_size = t.at("batch_size");
  opt.seed = cfg.at("seed").get<std::uint64_t>() ^ 0x5eed5ULL;

  log_line("training: " + std::to_string(opt.iterations) + " iterations");
  TrainResult result = train(init, data, env->nominal_dynamics(), regs, opt);
  save_model(result.model, m.at("path"));
  std::cout << "wrote " << m.at("path").get<std::string>()
            << " (final loss " << (result.loss_curve.empty()
                                       ? 0.0
                                       : result.loss_curve.back())
            << (result.aborted_non_finite ? ", aborted on non-finite loss" : "")
            << ")\n";
  return 0;
}

int cmd_calibrate(const json& cfg) {
  const json& c = cfg.at("calibrate");
  RngStream rng(cfg.at("seed").get<std::uint64_t>(), 17);
  SyntheticLinearSystem sys(c.at("d"), c.at("sigma"), rng);
  CoverageReport rep = calibration_audit(sys, c.at("trials"), c.at("horizon"),
                                         c.at("delta_i"), rng);
  const fs::path out_dir = cfg.at("out_dir").get<std::string>();
  fs::create_directories(out_dir);
  const fs::path out = out_dir / "calibration.json";
  std::ofstream f(out);
  f << rep.to_json();
  std::cout << "wrote " << out.string() << "\n";
  for (size_t i = 0; i < rep.coverage.size(); ++i)
    std::cout << "dim " << i << ": coverage " << rep.coverage[i]
              << " (CI lower " << rep.ci_lower[i] << ", target "
              << 1.0 - rep.delta_i << ")\n";
  return 0;
}

struct EpisodeSetup {
  std::unique_ptr<Env> env;
  Eigen::VectorXd x0;
  int scenario = 0;
};

EpisodeSetup make_episode_env(const json& cfg, int episode) {
  json ecfg = cfg;
  const bool freeflyer = cfg.at("env").at("name") == "freeflyer";
  const bool cycle =
      freeflyer && cfg.at("env").value("cycle_scenarios", true);
  if (cycle) ecfg["env"]["scenario"] = episode % 4;
  EpisodeSetup s;
  s.env = build_env(ecfg);
  s.x0 = episode_x0(ecfg, *s.env);
  s.scenario = ecfg.at("env").at("scenario");
  return s;
}

EpisodeResult run_one(const json& cfg, const MetaModel& model,
                      const SeelsConfig& sc, Env& env,
                      const Eigen::VectorXd& x0, int episode,
                      const std::optional<std::string>& log_path) {
  RngStream ep(cfg.at("seed").get<std::uint64_t>(), 19);
  RngStream ep_rng = ep.substream(static_cast<std::uint64_t>(episode));
  RngStream param_rng = ep_rng.substream(0);
  env.sample_params(param_rng);
  RngStream run_rng = ep_rng.substream(1);
  return run_episode(env, model, sc, x0, run_rng, log_path);
}

int cmd_run_episode(const json& cfg) {
  MetaModel model = load_model(cfg.at("model").at("path"));
  SeelsConfig sc = seels_config_from(cfg);
  const fs::path out_dir = cfg.at("out_dir").get<std::string>();
  fs::create_directories(out_dir / "episodes");
  EpisodeSetup s = make_episode_env(cfg, 0);
  const std::string log_path = (out_dir / "episodes" / "episode_0000.jsonl").string();
  EpisodeResult res = run_one(cfg, model, sc, *s.env, s.x0, 0, log_path);
  std::cout << "status: " << episode_status_name(res.status)
            << ", explore phases: " << res.explore_phases
            << ", reach phases: " << res.reach_phases
            << ", steps: " << res.total_steps
            << ", joint constraints: " << (res.audit.joint() ? "ok" : "violated")
            << "\nlog: " << log_path << "\n";
  return 0;
}

int cmd_run_batch(const json& cfg) {
  MetaModel model = load_model(cfg.at("model").at("path"));
  SeelsConfig sc = seels_config_from(cfg);
  const int episodes = cfg.at("episodes");
  const int jobs = std::max(1, cfg.at("jobs").get<int>());
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  const fs::path out_dir = cfg.at("out_dir").get<std::string>();
  fs::create_directories(out_dir / "episodes");
  fs::create_directories(out_dir / "plots");

  std::vector<EpisodeRow> rows(episodes);
  std::vector<std::string> errors(episodes);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i = next.fetch_add(1); i < episodes; i = next.fetch_add(1)) {
      try {
        EpisodeSetup s = make_episode_env(cfg, i);
        char name[64];
        std::snprintf(name, sizeof(name), "episode_%04d.jsonl", i);
        const std::string log_path = (out_dir / "episodes" / name).string();
        EpisodeResult res =
            run_one(cfg, model, sc, *s.env, s.x0, i, log_path);
        rows[i] = EpisodeRow::from_result(
            i, cfg.at("seed").get<std::uint64_t>(), s.scenario, res);
        log_line("episode " + std::to_string(i) + ": " +
                 episode_status_name(res.status) + ", explore " +
                 std::to_string(res.explore_phases));
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (int i = 0; i < episodes; ++i)
    if (!errors[i].empty())
      throw std::runtime_error("episode " + std::to_string(i) +
                               " failed: " + errors[i]);

  BatchReport report = aggregate(std::move(rows));
  report.config_echo = cfg.dump(2);
  {
    std::ofstream f(out_dir / "report.csv");
    f << report_to_csv(report);
  }
  {
    std::ofstream f(out_dir / "report.json");
    f << report_to_json(report);
  }

  for (int i = 0; i < episodes; ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "episode_%04d", i);
    std::ifstream in(out_dir / "episodes" / (std::string(name) + ".jsonl"));
    std::stringstream buf;
    buf << in.rdbuf();
    EpisodeSetup s = make_episode_env(cfg, i);
    std::ofstream svg(out_dir / "plots" / (std::string(name) + ".svg"));
    svg << episode_svg(parse_episode_log(buf.str()), s.env->spec());
  }

  std::cout << "episodes: " << episodes << "\n"
            << "explore phases: " << report.explore_mean << " +/- "
            << report.explore_ci << "\n"
            << "joint satisfaction: " << report.joint_rate << " +/- "
            << report.joint_ci << "\n"
            << "goal reached: " << report.goal_rate << "\n"
            << "reports: " << (out_dir / "report.csv").string() << ", "
            << (out_dir / "report.json").string() << "\n";
  return 0;
}

int cmd_plot(const json& cfg, const std::string& log_path,
             const std::string& out_path) {
  std::ifstream in(log_path);
  if (!in) throw ConfigError("cannot open episode log: " + log_path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::unique_ptr<Env> env = build_env(cfg);
  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot write plot: " + out_path);
  out << episode_svg(parse_episode_log(buf.str()), env->spec());
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe exploration-exploitation laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::optional<double> delta;
  std::optional<int> samples_m;
  std::optional<int> jobs;
  std::optional<std::string> out_dir;
  bool baseline = false;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--set", sets, "Override a leaf key, e.g. seels.delta=0.2");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--episodes", episodes, "Batch episode count");
  app.add_option("--delta", delta, "Joint chance-constraint level");
  app.add_option("--samples-M", samples_m, "Scenario sample count");
  app.add_option("--jobs", jobs, "Worker threads for batches");
  app.add_option("--out-dir", out_dir, "Artifact output directory");
  app.add_flag("--baseline", baseline,
               "Mean-equivalent baseline (confidence sets collapsed)");

  auto* c_gen = app.add_subcommand("gen-data", "Generate a meta-training dataset");
  auto* c_train = app.add_subcommand("meta-train", "Train the meta-model");
  auto* c_cal = app.add_subcommand("calibrate", "Confidence-set coverage audit");
  auto* c_ep = app.add_subcommand("run-episode", "Run a single episode");
  auto* c_batch = app.add_subcommand("run-batch", "Run a randomized batch");
  auto* c_plot = app.add_subcommand("plot", "Render an episode log as SVG");
  std::string plot_log, plot_out = "episode.svg";
  c_plot->add_option("log", plot_log, "Episode .jsonl log")->required();
  c_plot->add_option("--out", plot_out, "Output SVG path");
  for (auto* sub : {c_gen, c_train, c_cal, c_ep, c_batch, c_plot})
    sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    json cfg = load_config(config_path, sets);
    if (seed) cfg["seed"] = *seed;
    if (episodes) cfg["episodes"] = *episodes;
    if (delta) cfg["seels"]["delta"] = *delta;
    if (samples_m) cfg["seels"]["samples_m"] = *samples_m;
    if (jobs) cfg["jobs"] = *jobs;
    if (out_dir) cfg["out_dir"] = *out_dir;
    if (baseline) cfg["seels"]["baseline"] = true;

    if (c_gen->parsed()) return cmd_gen_data(cfg);
    if (c_train->parsed()) return cmd_meta_train(cfg);
    if (c_cal->parsed()) return cmd_calibrate(cfg);
    if (c_ep->parsed()) return cmd_run_episode(cfg);
    if (c_batch->parsed()) return cmd_run_batch(cfg);
    if (c_plot->parsed()) return cmd_plot(cfg, plot_log, plot_out);
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
