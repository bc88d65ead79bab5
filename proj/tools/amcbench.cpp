// amcbench: synthesize modulation datasets, train the four classifier
// architectures on time- or frequency-domain features, craft l2 FGSM/BIM
// attacks against a time-domain surrogate, and evaluate transferability.
//
// Subcommands compose through files only:
//   gen -> .amcd   train -> .ckpt + history.csv   attack -> perturbed .amcd
//   eval -> report.json + confusion.csv           sweep -> sweep.csv

#include "amc/attacks.hpp"
#include "amc/eval.hpp"
#include "amc/features.hpp"
#include "amc/io.hpp"
#include "amc/sigsynth.hpp"
#include "amc/zoo.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

void write_manifest(const std::string& output_path, const json& config) {
  std::ofstream os(output_path + ".manifest.json");
  if (!os) throw amc::DataError("cannot write manifest for " + output_path);
  os << config.dump(2) << "\n";
}

amc::Domain parse_domain(const std::string& s) {
  if (s == "time") return amc::Domain::Time;
  if (s == "freq") return amc::Domain::Freq;
  throw amc::UsageError("domain must be 'time' or 'freq'");
}

// Loads a dataset and brings it into the requested domain (time datasets
// are transformed on load for freq consumers; the reverse is impossible).
amc::Dataset load_in_domain(const std::string& path, amc::Domain want) {
  amc::Dataset ds = amc::load_amcd(path);
  if (ds.domain == want) return ds;
  if (ds.domain == amc::Domain::Time && want == amc::Domain::Freq)
    return amc::transform_dataset(ds);
  throw amc::DataError(
      "dataset " + path +
      " is frequency-domain; cannot be used where time-domain is required");
}

std::vector<int> select_subset(const amc::Dataset& ds, const std::string& name,
                               std::uint64_t split_seed) {
  if (name == "all") {
    std::vector<int> idx(ds.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    return idx;
  }
  amc::SplitIndex si = amc::split(ds, {}, split_seed);
  if (name == "train") return si.train;
  if (name == "val") return si.val;
  if (name == "test") return si.test;
  throw amc::UsageError("subset must be one of all|train|val|test");
}

std::vector<double> parse_grid(const std::string& spec) {
  // "start:stop:steps" or comma-separated values
  std::vector<double> grid;
  if (spec.find(':') != std::string::npos) {
    double start, stop;
    int steps;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%d", &start, &stop, &steps) != 3 ||
        steps < 1)
      throw amc::UsageError("grid must be start:stop:steps or v1,v2,...");
    for (int i = 0; i < steps; ++i)
      grid.push_back(steps == 1 ? start
                                : start + (stop - start) * i / (steps - 1));
  } else {
    std::size_t pos = 0;
    while (pos < spec.size()) {
      std::size_t next = spec.find(',', pos);
      if (next == std::string::npos) next = spec.size();
      grid.push_back(std::stod(spec.substr(pos, next - pos)));
      pos = next + 1;
    }
  }
  if (grid.empty()) throw amc::UsageError("empty grid");
  return grid;
}

int run(int argc, char** argv) {
  CLI::App app{"Modulation-classification adversarial robustness benchmark"};
  app.require_subcommand(1);
  bool deterministic = false;
  app.add_flag("--deterministic", deterministic,
               "force fully serial, bit-reproducible execution (currently "
               "always on; flag kept for interface stability)");

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "synthesize a labeled dataset");
  int per_class = 1500, frame_len = 128;
  double snr_db = 18.0, cfo = 0.0, sro_ppm = 0.0;
  bool no_noise = false;
  std::uint64_t seed = 0;
  std::string profile = "desk", gen_out;
  gen->add_option("--per-class", per_class, "frames per modulation class");
  gen->add_option("--frame-len", frame_len, "samples per frame");
  gen->add_option("--snr-db", snr_db, "channel SNR in dB");
  gen->add_option("--cfo", cfo, "normalized center frequency offset");
  gen->add_option("--sro-ppm", sro_ppm, "sample rate offset in ppm");
  gen->add_flag("--no-noise", no_noise, "disable AWGN");
  gen->add_option("--seed", seed, "generation seed");
  gen->add_option("--profile", profile, "desk (1500/class) or full (6000/class)")
      ->check(CLI::IsMember({"desk", "full"}));
  gen->add_option("-o,--output", gen_out, "output .amcd path")->required();

  // ---- train ----
  auto* train = app.add_subcommand("train", "train one architecture");
  std::string arch_s = "cnn", domain_s = "time", data_path, ckpt_out,
              history_out;
  int epochs = 75, batch = 64;
  double lr = 1e-3;
  std::uint64_t train_seed = 0, split_seed_opt = 0;
  bool split_seed_set = false;
  train->add_option("--arch", arch_s, "fcnn|cnn|rnn|crnn")
      ->check(CLI::IsMember({"fcnn", "cnn", "rnn", "crnn"}));
  train->add_option("--domain", domain_s, "time|freq feature domain")
      ->check(CLI::IsMember({"time", "freq"}));
  train->add_option("--data", data_path, "input .amcd")->required();
  train->add_option("--epochs", epochs, "training epochs");
  train->add_option("--batch", batch, "batch size");
  train->add_option("--lr", lr, "Adam learning rate");
  train->add_option("--seed", train_seed, "init/shuffle seed");
  train->add_option("--split-seed", split_seed_opt, "split seed (default: --seed)")
      ->each([&](const std::string&) { split_seed_set = true; });
  train->add_option("-o,--output", ckpt_out, "output .ckpt path")->required();
  train->add_option("--history", history_out,
                    "history CSV path (default: <output>.history.csv)");

  // ---- attack ----
  auto* attack = app.add_subcommand("attack", "perturb a time-domain dataset");
  std::string method_s = "fgsm", model_path, atk_data, atk_out,
              convention_s = "radius", subset_s = "all";
  double budget = 0.02, alpha = 0.002;
  int iters = 10;
  std::uint64_t atk_split_seed = 0;
  attack->add_option("--method", method_s, "fgsm|bim")
      ->check(CLI::IsMember({"fgsm", "bim"}));
  attack->add_option("--model", model_path, "surrogate .ckpt")->required();
  attack->add_option("--data", atk_data, "input time-domain .amcd")->required();
  attack->add_option("--budget", budget, "perturbation budget P_T");
  attack->add_option("--alpha", alpha, "BIM per-iteration step");
  attack->add_option("--iters", iters, "BIM iterations");
  attack->add_option("--convention", convention_s,
                     "budget reading: radius (||d||<=P_T) or power (||d||^2<=P_T)")
      ->check(CLI::IsMember({"radius", "power"}));
  attack->add_option("--subset", subset_s, "all|train|val|test")
      ->check(CLI::IsMember({"all", "train", "val", "test"}));
  attack->add_option("--split-seed", atk_split_seed, "seed for --subset split");
  attack->add_option("-o,--output", atk_out, "output .amcd path")->required();

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "evaluate a model on a dataset");
  std::string eval_model, eval_data, report_out = "report.json", confusion_out,
              eval_subset = "all";
  std::uint64_t eval_split_seed = 0;
  eval->add_option("--model", eval_model, "model .ckpt")->required();
  eval->add_option("--data", eval_data, "input .amcd")->required();
  eval->add_option("--subset", eval_subset, "all|train|val|test")
      ->check(CLI::IsMember({"all", "train", "val", "test"}));
  eval->add_option("--split-seed", eval_split_seed, "seed for --subset split");
  eval->add_option("-o,--report", report_out, "output report.json path");
  eval->add_option("--confusion", confusion_out,
                   "confusion CSV path (default: <report>.confusion.csv)");

  // ---- sweep ----
  auto* sweep = app.add_subcommand(
      "sweep", "budget/alpha sweep of a transfer experiment");
  std::string sw_surrogate, sw_target, sw_data, sw_method = "fgsm",
              sw_grid = "0.0:0.02:11", sw_out = "sweep.csv",
              sw_convention = "radius", sw_subset = "test";
  double sw_budget = 0.02;
  int sw_iters = 10;
  std::uint64_t sw_split_seed = 0;
  sweep->add_option("--surrogate", sw_surrogate, "time-domain surrogate .ckpt")
      ->required();
  sweep->add_option("--target", sw_target, "frequency-domain target .ckpt")
      ->required();
  sweep->add_option("--data", sw_data, "time-domain .amcd")->required();
  sweep->add_option("--method", sw_method, "fgsm|bim")
      ->check(CLI::IsMember({"fgsm", "bim"}));
  sweep->add_option("--grid", sw_grid,
                    "budget grid (fgsm) or alpha grid (bim); "
                    "start:stop:steps or comma list");
  sweep->add_option("--budget", sw_budget, "fixed P_T for bim sweeps");
  sweep->add_option("--iters", sw_iters, "BIM iterations");
  sweep->add_option("--convention", sw_convention, "radius|power")
      ->check(CLI::IsMember({"radius", "power"}));
  sweep->add_option("--subset", sw_subset, "all|train|val|test")
      ->check(CLI::IsMember({"all", "train", "val", "test"}));
  sweep->add_option("--split-seed", sw_split_seed, "seed for --subset split");
  sweep->add_option("-o,--output", sw_out, "output sweep.csv path");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    if (!gen->count("--per-class") && profile == "full") per_class = 6000;
    amc::ChannelConfig cfg;
    cfg.snr_db = snr_db;
    cfg.cfo_normalized = cfo;
    cfg.sro_ppm = sro_ppm;
    cfg.noise_enabled = !no_noise;
    amc::Dataset ds = amc::synthesize_dataset(
        per_class, frame_len, amc::default_schemes(), cfg, seed);
    amc::save_amcd(ds, gen_out);
    write_manifest(gen_out, {{"command", "gen"},
                             {"per_class", per_class},
                             {"frame_len", frame_len},
                             {"snr_db", snr_db},
                             {"cfo", cfo},
                             {"sro_ppm", sro_ppm},
                             {"noise", !no_noise},
                             {"seed", seed},
                             {"profile", profile},
                             {"output", gen_out}});
    std::cout << "wrote " << ds.size() << " frames to " << gen_out << "\n";
    return 0;
  }

  if (train->parsed()) {
    const amc::Domain domain = parse_domain(domain_s);
    const std::uint64_t split_seed = split_seed_set ? split_seed_opt : train_seed;
    amc::Dataset ds = load_in_domain(data_path, domain);
    amc::SplitIndex si = amc::split(ds, {}, split_seed);
    amc::Model model = amc::build_model(amc::arch_from_name(arch_s), domain,
                                        ds.frame_len(), ds.num_classes(),
                                        train_seed);
    amc::TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.learning_rate = lr;
    cfg.seed = train_seed;
    amc::train(model, ds, si.train, si.val, cfg);
    amc::save_checkpoint(model, ckpt_out);
    const std::string hist =
        history_out.empty() ? ckpt_out + ".history.csv" : history_out;
    amc::save_history_csv(model, hist);
    write_manifest(ckpt_out, {{"command", "train"},
                              {"arch", arch_s},
                              {"domain", domain_s},
                              {"data", data_path},
                              {"epochs", epochs},
                              {"batch", batch},
                              {"lr", lr},
                              {"seed", train_seed},
                              {"split_seed", split_seed},
                              {"output", ckpt_out},
                              {"history", hist}});
    std::cout << "trained " << arch_s << "-" << domain_s << ": final val acc "
              << model.history.back().val_acc << "\n";
    return 0;
  }

  if (attack->parsed()) {
    amc::Model surrogate = amc::load_checkpoint(model_path);
    amc::Dataset ds = amc::load_amcd(atk_data);
    if (subset_s != "all") ds = amc::subset(ds, select_subset(ds, subset_s, atk_split_seed));
    amc::AttackConfig cfg;
    cfg.method = method_s == "fgsm" ? amc::AttackMethod::FGSM
                                    : amc::AttackMethod::BIM;
    cfg.power_budget = budget;
    cfg.alpha = alpha;
    cfg.iterations = iters;
    cfg.convention = convention_s == "radius" ? amc::NormConvention::Radius
                                              : amc::NormConvention::Power;
    int zero_grad = 0;
    amc::Dataset out = amc::perturb_dataset(surrogate, ds, cfg, &zero_grad);
    amc::save_amcd(out, atk_out);
    write_manifest(atk_out, {{"command", "attack"},
                             {"method", method_s},
                             {"model", model_path},
                             {"data", atk_data},
                             {"budget", budget},
                             {"alpha", alpha},
                             {"iters", iters},
                             {"convention", convention_s},
                             {"subset", subset_s},
                             {"split_seed", atk_split_seed},
                             {"zero_gradient_frames", zero_grad},
                             {"output", atk_out}});
    std::cout << "perturbed " << out.size() << " frames (" << zero_grad
              << " zero-gradient pass-throughs) -> " << atk_out << "\n";
    return 0;
  }

  if (eval->parsed()) {
    amc::Model model = amc::load_checkpoint(eval_model);
    amc::Dataset raw = amc::load_amcd(eval_data);
    if (eval_subset != "all")
      raw = amc::subset(raw, select_subset(raw, eval_subset, eval_split_seed));
    amc::Dataset ds = raw.domain == model.domain
                          ? std::move(raw)
                          : amc::transform_dataset(raw);
    if (ds.domain != model.domain)
      throw amc::DataError("dataset/model domain mismatch");
    amc::EvalReport r = amc::evaluate(model, ds);
    amc::save_report_json(r, report_out);
    const std::string conf =
        confusion_out.empty() ? report_out + ".confusion.csv" : confusion_out;
    amc::save_confusion_csv(r, conf);
    write_manifest(report_out, {{"command", "eval"},
                                {"model", eval_model},
                                {"data", eval_data},
                                {"subset", eval_subset},
                                {"split_seed", eval_split_seed},
                                {"report", report_out},
                                {"confusion", conf}});
    std::cout << "accuracy " << r.accuracy << " -> " << report_out << "\n";
    return 0;
  }

  if (sweep->parsed()) {
    amc::Model surrogate = amc::load_checkpoint(sw_surrogate);
    amc::Model target = amc::load_checkpoint(sw_target);
    amc::Dataset ds = amc::load_amcd(sw_data);
    if (ds.domain != amc::Domain::Time)
      throw amc::DataError("sweep requires a time-domain dataset");
    if (sw_subset != "all")
      ds = amc::subset(ds, select_subset(ds, sw_subset, sw_split_seed));
    amc::AttackConfig base;
    base.method = sw_method == "fgsm" ? amc::AttackMethod::FGSM
                                      : amc::AttackMethod::BIM;
    base.power_budget = sw_budget;
    base.iterations = sw_iters;
    base.convention = sw_convention == "radius" ? amc::NormConvention::Radius
                                                : amc::NormConvention::Power;
    auto rows =
        amc::budget_sweep(surrogate, target, ds, parse_grid(sw_grid), base);
    amc::save_sweep_csv(rows, sw_out);
    write_manifest(sw_out, {{"command", "sweep"},
                            {"surrogate", sw_surrogate},
                            {"target", sw_target},
                            {"data", sw_data},
                            {"method", sw_method},
                            {"grid", sw_grid},
                            {"budget", sw_budget},
                            {"iters", sw_iters},
                            {"convention", sw_convention},
                            {"subset", sw_subset},
                            {"split_seed", sw_split_seed},
                            {"output", sw_out}});
    std::cout << "wrote " << rows.size() << " sweep rows -> " << sw_out << "\n";
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const amc::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const amc::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const amc::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
