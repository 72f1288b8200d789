#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mdpp/error.hpp"
#include "mdpp/experiment.hpp"
#include "mdpp/io.hpp"
#include "mdpp/kernel.hpp"
#include "mdpp/markov.hpp"
#include "mdpp/oracle.hpp"
#include "mdpp/random.hpp"
#include "mdpp/sampler.hpp"

namespace {

using mdpp::ErrorKind;
using nlohmann::json;

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kNumerical = 3, kCheckFailed = 4, kIo = 5 };

enum class Stage { Config, Kernel, Run };

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
};

struct Loaded {
  json doc;
  std::filesystem::path base;  // directory of the config file
};

Stage stage = Stage::Config;

int exit_code(const mdpp::Error &e) {
  switch (e.kind()) {
    case ErrorKind::Io: return kIo;
    case ErrorKind::GuardExceeded: return kConfig;
    case ErrorKind::InvalidArgument:
      return stage == Stage::Config ? kConfig : stage == Stage::Kernel ? kNumerical : kConfig;
    case ErrorKind::SingularKernel:
    case ErrorKind::ChainUndefined:
    case ErrorKind::IllConditioned:
    case ErrorKind::InfeasibleCardinality:
    case ErrorKind::DynamicRange:
    case ErrorKind::NumericOverflow:
      return stage == Stage::Config ? kConfig : kNumerical;
    case ErrorKind::UndefinedMetric: return kOther;
  }
  return kOther;
}

Loaded load_config(const Options &opt) {
  stage = Stage::Config;
  Loaded loaded;
  const std::string text = mdpp::read_file(opt.config_path);
  try {
    loaded.doc = json::parse(text);
  } catch (const json::exception &e) {
    mdpp::fail(ErrorKind::InvalidArgument, std::string("malformed config JSON: ") + e.what());
  }
  if (!loaded.doc.is_object()) mdpp::fail(ErrorKind::InvalidArgument, "config must be a JSON object");
  loaded.base = std::filesystem::path(opt.config_path).parent_path();
  return loaded;
}

template <typename T>
T get_or(const json &doc, const char *key, T fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc[key].get<T>();
  } catch (const json::exception &e) {
    mdpp::fail(ErrorKind::InvalidArgument, std::string("bad value for '") + key + "': " + e.what());
  }
}

void require_keys(const json &doc, std::initializer_list<const char *> allowed) {
  for (const auto &[key, value] : doc.items()) {
    bool ok = false;
    for (const char *a : allowed) ok = ok || key == a;
    if (!ok) mdpp::fail(ErrorKind::InvalidArgument, "unknown config key '" + key + "'");
  }
}

std::uint64_t seed_of(const Options &opt, const json &doc) {
  return opt.seed ? *opt.seed : get_or<std::uint64_t>(doc, "seed", 1);
}

mdpp::KernelForm form_of(const json &doc) {
  const auto form = get_or<std::string>(doc, "form", "ensemble");
  if (form == "ensemble") return mdpp::KernelForm::Ensemble;
  if (form == "marginal") return mdpp::KernelForm::Marginal;
  mdpp::fail(ErrorKind::InvalidArgument, "form must be 'ensemble' or 'marginal'");
}

// A uniformly rotated spectrum drawn on [0, max_eigenvalue].
mdpp::Matrix random_kernel(std::size_t n, double max_eigenvalue, std::uint64_t seed) {
  mdpp::RandomSource rng(seed);
  std::normal_distribution<double> normal;
  mdpp::Matrix g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng.engine());
  const mdpp::Matrix q = Eigen::HouseholderQR<mdpp::Matrix>(g).householderQ();
  mdpp::Vector spectrum(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) spectrum[i] = max_eigenvalue * rng.uniform();
  if (n) spectrum[0] = max_eigenvalue;
  return q * spectrum.asDiagonal() * q.transpose();
}

// Ensemble kernel from "kernel" (CSV path relative to the config, or an
// inline array of rows) or "random" ({n, max_eigenvalue}).
mdpp::Kernel load_kernel(const Loaded &cfg, std::uint64_t seed) {
  const json &doc = cfg.doc;
  mdpp::Matrix entries;
  if (doc.contains("kernel") == doc.contains("random"))
    mdpp::fail(ErrorKind::InvalidArgument, "config needs exactly one of 'kernel' and 'random'");
  const mdpp::KernelForm form = form_of(doc);
  if (doc.contains("kernel") && doc["kernel"].is_string()) {
    const std::filesystem::path path = cfg.base / doc["kernel"].get<std::string>();
    stage = Stage::Kernel;
    entries = mdpp::read_matrix_csv(path.string());
  } else if (doc.contains("kernel")) {
    const auto rows = get_or<std::vector<std::vector<double>>>(doc, "kernel", {});
    entries.resize(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != static_cast<std::size_t>(entries.cols()))
        mdpp::fail(ErrorKind::InvalidArgument, "inline kernel rows differ in length");
      for (std::size_t j = 0; j < rows[i].size(); ++j)
        entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  } else {
    const json &r = doc["random"];
    const auto n = get_or<std::size_t>(r, "n", 6);
    const auto top = get_or<double>(r, "max_eigenvalue", 0.9);
    if (!(top > 0.0)) mdpp::fail(ErrorKind::InvalidArgument, "random.max_eigenvalue must be positive");
    entries = random_kernel(n, top, mdpp::mix_seed(seed, mdpp::stable_hash("random kernel")));
  }
  stage = Stage::Kernel;
  mdpp::Kernel k(std::move(entries), form);
  if (form == mdpp::KernelForm::Marginal) k = mdpp::ensemble_from_marginal(k);
  stage = Stage::Run;
  return k;
}

std::string csv_field(const std::string &text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

void emit(const Options &opt, const json &doc, const std::string &text) {
  std::string out = opt.out ? *opt.out : get_or<std::string>(doc, "out", "");
  if (out.empty() || out == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    std::fflush(stdout);
    return;
  }
  mdpp::write_file(out, text);
}

int cmd_sample(const Options &opt) {
  const Loaded cfg = load_config(opt);
  require_keys(cfg.doc, {"kernel", "random", "form", "k", "samples", "seed", "out"});
  const std::uint64_t seed = seed_of(opt, cfg.doc);
  const auto samples = get_or<std::size_t>(cfg.doc, "samples", 1);
  const std::optional<std::size_t> k =
      cfg.doc.contains("k") ? std::optional(get_or<std::size_t>(cfg.doc, "k", 0)) : std::nullopt;
  const mdpp::Kernel l = load_kernel(cfg, seed);
  const mdpp::RandomSource root(seed);
  std::vector<mdpp::Subset> sets;
  sets.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    mdpp::RandomSource rng = root.substream(s);
    sets.push_back(k ? mdpp::sample_kdpp(l, *k, rng) : mdpp::sample_dpp(l, rng));
  }
  emit(opt, cfg.doc, mdpp::format_subsets(sets));
  return kOk;
}

int cmd_chain(const Options &opt) {
  const Loaded cfg = load_config(opt);
  require_keys(cfg.doc, {"kernel", "random", "form", "variant", "k", "steps", "seed", "out"});
  const std::uint64_t seed = seed_of(opt, cfg.doc);
  const auto variant_name = get_or<std::string>(cfg.doc, "variant", "mkdpp");
  mdpp::ChainVariant variant;
  if (variant_name == "mdpp") variant = mdpp::ChainVariant::MDPP;
  else if (variant_name == "mkdpp") variant = mdpp::ChainVariant::MkDPP;
  else mdpp::fail(ErrorKind::InvalidArgument, "variant must be 'mdpp' or 'mkdpp'");
  const auto k = get_or<std::size_t>(cfg.doc, "k", 1);
  const auto steps = get_or<std::size_t>(cfg.doc, "steps", 10);
  if (steps < 1) mdpp::fail(ErrorKind::InvalidArgument, "steps must be at least 1");
  const mdpp::Kernel l = load_kernel(cfg, seed);
  const mdpp::RandomSource rng(seed);
  emit(opt, cfg.doc, mdpp::format_subsets(mdpp::sample_chain(l, variant, k, steps, rng)));
  return kOk;
}

int cmd_oracle(const Options &opt) {
  const Loaded cfg = load_config(opt);
  require_keys(cfg.doc, {"kernel", "random", "form", "process", "k", "seed", "out"});
  const std::uint64_t seed = seed_of(opt, cfg.doc);
  const auto process = get_or<std::string>(cfg.doc, "process", "dpp");
  const auto k = get_or<std::size_t>(cfg.doc, "k", 1);
  const mdpp::Kernel l = load_kernel(cfg, seed);
  mdpp::SetDistribution d;
  if (process == "dpp") d = mdpp::enumerate_dpp(l);
  else if (process == "kdpp") d = mdpp::enumerate_kdpp(l, k);
  else if (process == "mdpp_union") d = mdpp::enumerate_union(l, mdpp::ChainVariant::MDPP, 0);
  else if (process == "mkdpp_union") d = mdpp::enumerate_union(l, mdpp::ChainVariant::MkDPP, k);
  else if (process == "mkdpp_margin") d = mdpp::mkdpp_margin_closed_form(l, k);
  else {
    stage = Stage::Config;
    mdpp::fail(ErrorKind::InvalidArgument,
               "process must be dpp, kdpp, mdpp_union, mkdpp_union or mkdpp_margin");
  }
  emit(opt, cfg.doc, mdpp::format_distribution(d));
  return kOk;
}

int cmd_oracle_check(const Options &opt) {
  const Loaded cfg = load_config(opt);
  require_keys(cfg.doc, {"kernel", "random", "form", "k", "markov_dpp", "markov_kdpp", "tolerance", "seed", "out"});
  const std::uint64_t seed = seed_of(opt, cfg.doc);
  mdpp::BatteryOptions battery;
  battery.k = get_or<std::size_t>(cfg.doc, "k", battery.k);
  battery.markov_dpp = get_or<bool>(cfg.doc, "markov_dpp", battery.markov_dpp);
  battery.markov_kdpp = get_or<bool>(cfg.doc, "markov_kdpp", battery.markov_kdpp);
  battery.tolerance = get_or<double>(cfg.doc, "tolerance", battery.tolerance);
  const mdpp::Kernel l = load_kernel(cfg, seed);
  const auto results = mdpp::oracle_battery(l, battery);
  std::string text = "check,deviation,tolerance,passed,note\n";
  bool all = true;
  for (const auto &r : results) {
    all = all && r.passed;
    text += r.name + ',' + mdpp::format_double(r.deviation) + ',' + mdpp::format_double(r.tolerance) + ',' +
            (r.passed ? "1" : "0") + ',' + csv_field(r.note) + '\n';
  }
  emit(opt, cfg.doc, text);
  for (const auto &r : results)
    if (!r.passed) std::cerr << "FAIL " << r.name << (r.note.empty() ? "" : " (" + r.note + ")") << '\n';
  return all ? kOk : kCheckFailed;
}

int cmd_experiment(const Options &opt) {
  const Loaded cfg = load_config(opt);
  mdpp::ExperimentConfig config = mdpp::config_from_json(cfg.doc.dump());
  if (opt.seed) config.seed = *opt.seed;
  config.validate();
  const std::size_t threads = opt.threads ? *opt.threads : get_or<std::size_t>(cfg.doc, "threads", 1);
  if (threads < 1) mdpp::fail(ErrorKind::InvalidArgument, "threads must be at least 1");
  stage = Stage::Run;
  const mdpp::ExperimentResult result = mdpp::run_experiment(config, threads);
  for (const auto &r : result.records)
    if (!r.ok) std::cerr << "excluded run " << r.run << " of " << r.strategy << ": " << r.error << '\n';
  emit(opt, cfg.doc, mdpp::to_csv(result));
  return kOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Sampling, Markov chains, exact oracles and experiments for determinantal point processes"};
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--config", opt.config_path, "JSON config file")->required();
    sub->add_option("--seed", opt.seed, "root seed, overrides the config");
    sub->add_option("--out", opt.out, "output path, overrides the config; '-' for stdout");
    sub->add_option("--threads", opt.threads, "worker threads for experiments, overrides the config");
  };
  auto *sample = app.add_subcommand("sample", "draw DPP or k-DPP samples, one subset per line");
  auto *chain = app.add_subcommand("chain", "run a Markov DPP or Markov k-DPP trajectory");
  auto *check = app.add_subcommand("oracle-check", "run the exact invariant battery on one kernel");
  auto *oracle = app.add_subcommand("oracle", "print an exactly enumerated subset distribution");
  auto *experiment = app.add_subcommand("experiment", "run a fixed-quality or learning experiment");
  for (auto *sub : {sample, chain, check, oracle, experiment}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*sample) return cmd_sample(opt);
    if (*chain) return cmd_chain(opt);
    if (*check) return cmd_oracle_check(opt);
    if (*oracle) return cmd_oracle(opt);
    if (*experiment) return cmd_experiment(opt);
  } catch (const mdpp::Error &e) {
    std::cerr << "mdpp: " << mdpp::to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception &e) {
    std::cerr << "mdpp: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
