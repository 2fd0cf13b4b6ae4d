#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>

#include "ssrecon/errors.hpp"
#include "ssrecon/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ssrecon;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitOracle = 3;

struct Options {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  bool timing = false;
  std::string checkpoint;
  std::string input;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

ExperimentConfig load_config(const Options& o) {
  json raw = o.config_path.empty() ? json::object() : read_json(o.config_path);
  if (o.seed) raw["seed"] = *o.seed;
  if (o.mode) raw["mode"] = *o.mode;
  if (o.timing) raw["timing"] = true;
  return parse_config(raw);
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError(path.string() + ": cannot write");
  out << text;
  std::cout << "wrote " << path.string() << "\n";
}

std::string histories_csv(const ExperimentConfig& c, const std::vector<CellResult>& rows) {
  std::ostringstream out;
  out << output_header(c) << "method,sigma_n,R_omega,R_lambda,alpha,epoch,loss,val_nmse\n";
  out.precision(8);
  for (const auto& r : rows) {
    for (const auto& h : r.history) {
      out << r.method << ',' << r.sigma_n << ',' << r.r_omega << ',' << r.r_lambda << ',' << r.alpha << ',' << h.epoch
          << ',' << h.loss_mean << ',' << h.val_nmse << '\n';
    }
  }
  return out.str();
}

int cmd_compare(const Options& o, bool sweep) {
  const ExperimentConfig c = load_config(o);
  const auto rows = sweep ? run_alpha_sweep(c) : run_compare(c);
  const fs::path dir(o.out_dir);
  write_file(dir / (sweep ? "alpha_sweep.csv" : "results.csv"), results_csv(c, rows));
  write_file(dir / (sweep ? "alpha_sweep_history.csv" : "history.csv"), histories_csv(c, rows));
  return 0;
}

// Model used by verify when the config has no model section.
const char* kVerifyModel = R"({
  "prior": {"preset": "scalar", "scale": 1.0},
  "q": 4,
  "omega": {"kind": "column_polynomial", "accel": 2.0, "n_center": 1, "degree": 1.0},
  "lambda": {"accel": 1.6},
  "noise": {"sigma_n": 0.5, "alpha": 1.0}
})";

int cmd_verify(const Options& o) {
  json raw = o.config_path.empty() ? json::object() : read_json(o.config_path);
  if (!raw.is_object()) throw ConfigError("config: expected an object");
  if (!raw.contains("model")) raw["model"] = json::parse(kVerifyModel);
  if (o.seed) raw["seed"] = *o.seed;
  if (o.mode) raw["mode"] = *o.mode;
  const ExperimentConfig c = parse_config(raw);
  const VerifyResult r = run_verify(c);
  write_file(fs::path(o.out_dir) / "verify.json", verify_json(c, r).dump(2) + "\n");
  for (const auto& rep : r.reports) {
    const char* status = !rep.pass ? "INFO" : (*rep.pass ? "PASS" : "FAIL");
    std::cout << status << ' ' << rep.name << '\n';
  }
  return r.all_passed ? 0 : kExitOracle;
}

int cmd_train(const Options& o) {
  const ExperimentConfig c = load_config(o);
  const Method m = c.train.method;
  const double alpha = method_alpha(c, m);
  TrainedCell cell = train_cell(c, m, c.grid.sigma_n.front(), c.grid.r_omega.front(), c.grid.r_lambda.front(), alpha);
  const json ckpt{{"version", kVersion},
                  {"config", config_to_json(c)},
                  {"method", to_string(m)},
                  {"alpha", alpha},
                  {"checkpoint", checkpoint_to_json(*cell.estimator)}};
  const fs::path dir(o.out_dir);
  write_file(dir / "checkpoint.json", ckpt.dump() + "\n");
  write_file(dir / "train_history.csv", output_header(c) + history_csv(cell.history));
  return 0;
}

int cmd_reconstruct(const Options& o) {
  if (o.checkpoint.empty()) throw ConfigError("--checkpoint: required");
  if (o.input.empty()) throw ConfigError("--input: required");
  const json ckpt = read_json(o.checkpoint);
  json raw = ckpt.at("config");
  if (o.seed) raw["seed"] = *o.seed;
  if (o.mode) raw["mode"] = *o.mode;
  const ExperimentConfig c = parse_config(raw);
  const Method m = method_from_string(ckpt.at("method").get<std::string>());
  const double alpha = ckpt.at("alpha").get<double>();
  const EstimatorPtr est = checkpoint_from_json(ckpt.at("checkpoint"));
  const MeasurementModel model =
      cell_model(c, c.grid.sigma_n.front(), c.grid.r_omega.front(), c.grid.r_lambda.front(), alpha);

  const json in = read_json(o.input);
  const json items = in.contains("items") ? in.at("items") : json::array({in});
  json out_items = json::array();
  const Rng root = Rng(c.seed).substream("reconstruct");
  for (std::size_t t = 0; t < items.size(); ++t) {
    const json& it = items[t];
    const ComplexVector y = complex_vector_from_json(it.at("y"));
    require_same_size(y.size(), model.q(), "reconstruct input y");
    const auto idx = it.at("omega").get<std::vector<Index>>();
    const SamplingMask omega = SamplingMask::from_indices(model.q(), idx, model.p());
    Rng g = root.substream("item", t);
    const ReconResult r = reconstruct(m, *est, apply_mask(omega, y), omega, model, alpha, c.mode, g);
    const RealVector img = magnitude_image(r.estimate, model.shape());
    out_items.push_back({{"estimate", complex_vector_to_json(r.estimate)},
                         {"magnitude", std::vector<double>(img.begin(), img.end())},
                         {"pattern_fallback", r.pattern_fallback}});
  }
  const json out{{"version", kVersion}, {"config", config_to_json(c)}, {"method", to_string(m)}, {"items", out_items}};
  write_file(fs::path(o.out_dir) / "reconstruction.json", out.dump() + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised k-space reconstruction experiments"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON config path");
    sub->add_option("--out", o.out_dir, "Output directory");
    sub->add_option("--seed", o.seed, "Master seed (overrides the config)");
    sub->add_option("--mode", o.mode, "Inference mode")->check(CLI::IsMember({"practical", "theory"}));
  };
  auto* compare = app.add_subcommand("compare", "Train and score every method on the config grid");
  auto* sweep = app.add_subcommand("sweep-alpha", "Alpha sweep on the first grid cell");
  auto* verify = app.add_subcommand("verify", "Run the oracle suite and write a JSON report");
  auto* train_cmd = app.add_subcommand("train", "Train train.method on the first grid cell");
  auto* recon = app.add_subcommand("reconstruct", "Reconstruct measurements with a checkpoint");
  for (auto* sub : {compare, sweep, verify, train_cmd, recon}) common(sub);
  for (auto* sub : {compare, sweep}) sub->add_flag("--timing", o.timing, "Record wall-clock seconds per row");
  recon->add_option("--checkpoint", o.checkpoint, "checkpoint.json written by train");
  recon->add_option("--input", o.input, "JSON with y ([re, im] pairs) and omega (indices), or items of those");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  try {
    if (*compare) return cmd_compare(o, false);
    if (*sweep) return cmd_compare(o, true);
    if (*verify) return cmd_verify(o);
    if (*train_cmd) return cmd_train(o);
    if (*recon) return cmd_reconstruct(o);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
