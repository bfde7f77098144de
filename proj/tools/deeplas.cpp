// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

// deeplas command-line front end.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "deeplas/arch.hpp"
#include "deeplas/checkpoint.hpp"
#include "deeplas/config.hpp"
#include "deeplas/data.hpp"
#include "deeplas/decode.hpp"
#include "deeplas/gradsuite.hpp"
#include "deeplas/train.hpp"

namespace {

using namespace deeplas;

Dataset load_data(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw std::runtime_error("no such file: " + path.string());
  return read_features(path);
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed) {
  RunConfig rc = load_run_config(config_path);
  if (seed) rc.train.seed = *seed;
  if (rc.train_data.empty()) throw ConfigError(config_path + ": key 'train_data' is required");
  if (rc.dev_data.empty()) throw ConfigError(config_path + ": key 'dev_data' is required");
  const Dataset train = load_data(rc.train_data);
  const Dataset dev = load_data(rc.dev_data);
  if (train.empty() || dev.empty()) throw std::runtime_error("train: empty dataset");
  rc.model.input.dims = train.front().dims;
  LasModel<float> model(rc.model, rc.train.seed);
  std::filesystem::create_directories(rc.train.out_dir);
  const TrainResult r = train_loop(model, train, dev, rc.train, &std::cout);
  std::cout << "best dev_cer " << r.best_cer << " dev_wer " << r.best_wer << " at step "
            << r.best_step << "\n";
  return 0;
}

std::unique_ptr<LasModel<float>> load_model(const std::string& path) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("no such file: " + path);
  return load_checkpoint(path);
}

int cmd_eval(const std::string& ckpt, const std::string& data_path, std::int64_t beam) {
  auto model = load_model(ckpt);
  const Dataset data = load_data(data_path);
  EvalOptions opts;
  opts.beam = beam;
  const EvalResult r = evaluate(*model, data, opts);
  std::printf("utterances %zu\ncer %.6f\nwer %.6f\n", data.size(), r.cer, r.wer);
  return 0;
}

int cmd_decode(const std::string& ckpt, const std::string& features, std::int64_t beam) {
  auto model = load_model(ckpt);
  const Dataset data = load_data(features);
  EvalOptions opts;
  opts.beam = beam;
  const auto hyps = decode_dataset(*model, data, opts);
  for (std::size_t i = 0; i < data.size(); ++i)
    std::cout << data[i].id << '\t' << hyps[i] << '\n';
  return 0;
}

int cmd_gradcheck(const std::string& module) {
  const auto results = run_gradient_suite(module);
  bool ok = true;
  std::printf("%-20s %14s %8s  %s\n", "module", "max_rel_error", "seconds", "worst");
  for (const auto& r : results) {
    const bool pass = r.max_rel_error < kGradTolerance;
    ok = ok && pass;
    std::printf("%-20s %14.3e %8.2f  %s%s\n", r.name.c_str(), r.max_rel_error, r.seconds,
                r.worst_param.c_str(), pass ? "" : "  FAIL");
  }
  return ok ? 0 : 1;
}

int cmd_arch(const std::string& action, const std::string& text,
             const arch::InputSpec& input, const arch::ElaborateOptions& eo) {
  const arch::ArchExpr expr = arch::parse(text);
  if (action == "parse") {
    std::cout << arch::render(expr) << '\n';
    return 0;
  }
  std::cout << arch::elaborate(expr, input, eo).table();
  return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out) {
  const SynthJob job = load_synth_spec(spec_path);
  Dataset data = synthesize(job.spec, job.n_utts, job.seed);
  if (job.deltas) add_deltas(data);
  if (job.normalize) normalize_per_speaker(data);
  write_features(out, data);
  std::cout << "wrote " << data.size() << " utterances, " << data.front().dims
            << " dims, to " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deeplas: attention-based speech recognition on CPU"};
  app.require_subcommand(1);

  std::string config, ckpt, data, features, module, spec, out, action, arch_text;
  std::optional<std::uint64_t> seed;
  std::int64_t beam = 0;
  arch::InputSpec input;
  arch::ElaborateOptions eo;

  auto* train = app.add_subcommand("train", "train a model from a config file");
  train->add_option("--config", config, "key = value config")->required();
  train->add_option("--seed", seed, "override the config seed");

  auto* eval = app.add_subcommand("eval", "CER and WER of a checkpoint on a feature file");
  eval->add_option("--ckpt", ckpt)->required();
  eval->add_option("--data", data, "FBK1 file with transcripts")->required();
  eval->add_option("--beam", beam, "beam width; 0 or 1 decode greedily")->check(CLI::NonNegativeNumber);

  auto* decode = app.add_subcommand("decode", "print id<TAB>hypothesis per utterance");
  decode->add_option("--ckpt", ckpt)->required();
  decode->add_option("--features", features)->required();
  decode->add_option("--beam", beam)->check(CLI::NonNegativeNumber);

  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every layer");
  grad->add_option("--module", module, "one of: " + [] {
    std::string s;
    for (const auto& n : gradient_suite_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
  }());

  auto* archc = app.add_subcommand("arch", "parse or elaborate an architecture string");
  archc->add_option("action", action)->required()->check(CLI::IsMember({"parse", "elaborate"}));
  archc->add_option("arch", arch_text)->required();
  archc->add_option("--dims", input.dims, "feature dims per frame");
  archc->add_option("--input-channels", input.channels);
  archc->add_option("--hidden", eo.lstm_hidden);
  archc->add_option("--channels", eo.conv_channels);
  archc->add_flag("--baseline-subsample", eo.baseline_subsample);

  auto* synth = app.add_subcommand("synth", "write a synthetic FBK1 corpus");
  synth->add_option("--spec", spec)->required();
  synth->add_option("--out", out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(config, seed);
    if (*eval) return cmd_eval(ckpt, data, beam);
    if (*decode) return cmd_decode(ckpt, features, beam);
    if (*grad) return cmd_gradcheck(module);
    if (*archc) return cmd_arch(action, arch_text, input, eo);
    if (*synth) return cmd_synth(spec, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
