// Command-line driver: synthetic data generation, tensor completion,
// phase-transition sweeps and slice-wise low-rank decomposition.

#include "tu1/image_io.hpp"
#include "tu1/tu1.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

std::vector<tu1::Index> parse_shape(const std::string& s) {
  std::vector<tu1::Index> shape;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t next = s.find_first_of("x,", pos);
    if (next == std::string::npos) next = s.size();
    shape.push_back(static_cast<tu1::Index>(std::stoll(s.substr(pos, next - pos))));
    pos = next + 1;
  }
  if (shape.empty()) throw std::runtime_error("empty shape");
  return shape;
}

std::vector<tu1::Index> parse_index_list(const std::string& s) { return parse_shape(s); }

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t next = s.find(',', pos);
    if (next == std::string::npos) next = s.size();
    out.push_back(std::stod(s.substr(pos, next - pos)));
    pos = next + 1;
  }
  if (out.empty()) throw std::runtime_error("empty list");
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// Key-value config: `key = value` lines, `#` comments, optional double quotes
// around values.
std::map<std::string, std::string> parse_kv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (val.size() >= 2 && val.front() == '"' && val.back() == '"') {
      val = val.substr(1, val.size() - 2);
    }
    if (key.empty()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty key");
    }
    kv[key] = val;
  }
  return kv;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::runtime_error("not a boolean: " + v);
}

tu1::TransformFamily parse_transforms(const std::string& spec,
                                      const std::vector<tu1::Index>& shape) {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    std::size_t next = spec.find(',', pos);
    if (next == std::string::npos) next = spec.size();
    tokens.push_back(trim(spec.substr(pos, next - pos)));
    pos = next + 1;
  }
  if (tokens.size() != shape.size()) {
    throw std::runtime_error("--transforms needs one role per mode (" +
                             std::to_string(shape.size()) + " modes)");
  }
  tu1::TransformFamily fam(static_cast<int>(shape.size()));
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const std::string& t = tokens[k];
    const int mode = static_cast<int>(k);
    if (t == "identity") {
      fam.set_identity(mode);
    } else if (t == "learnable") {
      fam.set_learnable(mode);
    } else if (t == "dfm") {
      fam.set_fixed(mode, tu1::dfm(shape[k]));
    } else if (t == "dcm") {
      fam.set_fixed(mode, tu1::dcm(shape[k]));
    } else {
      throw std::runtime_error("unknown transform role: " + t +
                               " (want identity|learnable|dfm|dcm)");
    }
  }
  return fam;
}

struct SolverOpts {
  tu1::SolverConfig cfg;
  std::string config_path;
  std::string u_init = "identity";
  bool no_theorem_mode = false;
  CLI::App* sub = nullptr;

  void add_to(CLI::App* s) {
    sub = s;
    s->add_option("--config", config_path, "key-value config file");
    s->add_option("--mu0", cfg.mu0, "initial penalty weight");
    s->add_option("--eta0", cfg.eta0, "initial proximal weight");
    s->add_option("--rho-mu", cfg.rho_mu, "penalty growth factor");
    s->add_option("--rho-eta", cfg.rho_eta, "proximal growth factor");
    s->add_option("--mu-bar", cfg.mu_bar, "penalty cap");
    s->add_option("--eta-bar", cfg.eta_bar, "proximal cap");
    s->add_option("--eps", cfg.eps, "convergence tolerance on iterate changes");
    s->add_option("--max-iter", cfg.max_iter, "iteration cap");
    s->add_flag("--no-theorem-mode", no_theorem_mode,
                "drop the rho_eta > rho_mu^2 schedule check");
    s->add_option("--u-init", u_init, "learnable factor init: identity|random")
        ->check(CLI::IsMember({"identity", "random"}));
    s->add_flag("--track-procrustes", cfg.track_procrustes,
                "record factor-update objective changes");
  }

  // Config file fills anything the command line did not set explicitly.
  void finalize(std::uint64_t seed, std::string* model = nullptr, std::string* pair = nullptr,
                std::string* slice_pair = nullptr, std::string* transforms = nullptr) {
    if (!config_path.empty()) {
      const auto kv = parse_kv_file(config_path);
      auto want = [&](const std::string& key, const char* flag) {
        return kv.count(key) && sub->count(flag) == 0;
      };
      if (want("mu0", "--mu0")) cfg.mu0 = std::stod(kv.at("mu0"));
      if (want("eta0", "--eta0")) cfg.eta0 = std::stod(kv.at("eta0"));
      if (want("rho_mu", "--rho-mu")) cfg.rho_mu = std::stod(kv.at("rho_mu"));
      if (want("rho_eta", "--rho-eta")) cfg.rho_eta = std::stod(kv.at("rho_eta"));
      if (want("mu_bar", "--mu-bar")) cfg.mu_bar = std::stod(kv.at("mu_bar"));
      if (want("eta_bar", "--eta-bar")) cfg.eta_bar = std::stod(kv.at("eta_bar"));
      if (want("eps", "--eps")) cfg.eps = std::stod(kv.at("eps"));
      if (want("max_iter", "--max-iter")) cfg.max_iter = std::stoi(kv.at("max_iter"));
      if (want("theorem_mode", "--no-theorem-mode")) {
        cfg.theorem_mode = parse_bool(kv.at("theorem_mode"));
      }
      if (want("u_init", "--u-init")) u_init = kv.at("u_init");
      if (want("track_procrustes", "--track-procrustes")) {
        cfg.track_procrustes = parse_bool(kv.at("track_procrustes"));
      }
      if (model && kv.count("model") && sub->count("--model") == 0) *model = kv.at("model");
      if (pair && kv.count("pair") && sub->count("--pair") == 0) *pair = kv.at("pair");
      if (slice_pair && kv.count("slice_pair") && sub->count("--slice-pair") == 0) {
        *slice_pair = kv.at("slice_pair");
      }
      if (transforms && kv.count("transforms") && sub->count("--transforms") == 0) {
        *transforms = kv.at("transforms");
      }
    }
    if (no_theorem_mode) cfg.theorem_mode = false;
    if (u_init == "random") {
      cfg.u_init = tu1::SolverConfig::UInit::RandomOrthogonal;
    } else if (u_init == "identity") {
      cfg.u_init = tu1::SolverConfig::UInit::Identity;
    } else {
      throw std::runtime_error("u_init must be identity or random");
    }
    cfg.seed = seed;
  }

  // Per-mode roles from config keys mode1..modeh (1-based), if any.
  std::string transforms_from_config(int order) const {
    if (config_path.empty()) return "";
    const auto kv = parse_kv_file(config_path);
    bool any = false;
    std::string spec;
    for (int k = 1; k <= order; ++k) {
      if (k > 1) spec += ',';
      const auto it = kv.find("mode" + std::to_string(k));
      if (it != kv.end()) {
        spec += it->second;
        any = true;
      } else {
        spec += "identity";
      }
    }
    return any ? spec : "";
  }
};

tu1::MaskIndexSet mask_from_tensor(const tu1::RTensor& t) {
  std::vector<std::uint8_t> obs(static_cast<std::size_t>(t.numel()));
  for (tu1::Index i = 0; i < t.numel(); ++i) {
    obs[static_cast<std::size_t>(i)] = t[i] > 0.5 ? 1 : 0;
  }
  return tu1::MaskIndexSet(t.shape(), std::move(obs));
}

tu1::RTensor mask_to_tensor(const tu1::MaskIndexSet& m) {
  tu1::RTensor t(m.shape());
  for (tu1::Index i = 0; i < t.numel(); ++i) t[i] = m.observed(i) ? 1.0 : 0.0;
  return t;
}

std::string shape_str(const std::vector<tu1::Index>& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

json record_to_json(const tu1::IterationRecord& r) {
  return json{{"t", r.t},   {"objective", r.objective}, {"residual", r.residual},
              {"mu", r.mu}, {"eta", r.eta},             {"dZ", r.dZ},
              {"dX", r.dX}, {"dU_max", r.dU_max}};
}

void write_diagnostics_csv(const std::string& path,
                           const std::vector<tu1::IterationRecord>& hist) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write diagnostics: " + path);
  os << "t,objective,residual,mu,eta,dZ,dX,dU_max\n";
  char buf[256];
  for (const auto& r : hist) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t,
                  r.objective, r.residual, r.mu, r.eta, r.dZ, r.dX, r.dU_max);
    os << buf;
  }
}

void write_json(const std::string& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write: " + path);
  os << j.dump(2) << '\n';
}

tu1::SliceModePair default_slice_pair(const tu1::TransformFamily& fam) {
  std::vector<int> non_learnable;
  for (int k = 0; k < fam.order(); ++k) {
    if (fam.role(k) != tu1::ModeRole::Learnable) non_learnable.push_back(k);
  }
  if (non_learnable.size() < 2) {
    throw std::runtime_error("slice-wise model needs two non-learnable modes");
  }
  return tu1::SliceModePair{non_learnable[0], non_learnable[1]};
}

struct SynthArgs {
  std::string shape_str = "20,20,20,20";
  tu1::Index rank = 3;
  std::uint64_t seed = 0;
  std::string source = "dcm";
  std::string out;
  double p = -1;
  std::string mask_out;
  bool json_logs = false;
};

int run_synth(const SynthArgs& a) {
  tu1::SyntheticSpec spec;
  spec.shape = parse_shape(a.shape_str);
  spec.R = a.rank;
  spec.seed = a.seed;
  spec.source = a.source == "rand" ? tu1::FactorSource::RandomOrthogonal : tu1::FactorSource::Dcm;
  const tu1::RTensor m = tu1::gen_synthetic(spec);
  tu1::write_tensor(a.out, m);
  json info{{"shape", shape_str(spec.shape)}, {"R", spec.R},       {"seed", spec.seed},
            {"source", a.source},             {"tensor", a.out},   {"numel", m.numel()},
            {"fro_norm", tu1::frobenius_norm(m)}};
  if (a.p >= 0) {
    if (a.mask_out.empty()) throw std::runtime_error("--p needs --mask-out");
    const tu1::MaskIndexSet mask =
        tu1::gen_mask(spec.shape, a.p, tu1::detail::splitmix64(a.seed ^ 0xA5C3ull));
    tu1::write_tensor(a.mask_out, mask_to_tensor(mask));
    info["mask"] = a.mask_out;
    info["p"] = a.p;
    info["observed"] = mask.observed_count();
  }
  if (a.json_logs) {
    std::cout << info.dump() << '\n';
  } else {
    std::cout << "wrote " << a.out << " (shape " << info["shape"].get<std::string>() << ", R "
              << spec.R << ")\n";
    if (a.p >= 0) std::cout << "wrote " << a.mask_out << " (p " << a.p << ")\n";
  }
  return 0;
}

struct CompleteArgs {
  std::string input;
  std::string images_dir;
  bool shuffle = false;
  std::string synthetic;  // e.g. "R=3" or "R=3,shape=20x20x20x20,source=dcm"
  std::string shape_str;
  std::string mask_path;
  double p = -1;
  std::uint64_t seed = 0;
  std::string model = "tcu1";
  std::string pair;        // transformed-modes pair for tcsl, 1-based "1,4"
  std::string slice_pair;  // slice-modes pair, 1-based "2,3"
  std::string transforms;
  std::string out = "tu1_out";
  bool json_logs = false;
  SolverOpts solver;
};

int run_complete(CompleteArgs& a) {
  const int given = (!a.input.empty()) + (!a.images_dir.empty()) + (!a.synthetic.empty());
  if (given != 1) {
    throw CLI::ValidationError("complete", "need exactly one of --input, --images, --synthetic");
  }
  if (a.mask_path.empty() && a.p < 0) {
    throw CLI::ValidationError("complete", "need a sampling mask: pass --mask FILE or --p RATE");
  }

  a.solver.finalize(a.seed, &a.model, &a.pair, &a.slice_pair, &a.transforms);

  tu1::RTensor m;
  bool image_valued = false;
  tu1::TransformFamily default_fam(1);
  if (!a.synthetic.empty()) {
    tu1::SyntheticSpec spec;
    spec.shape = a.shape_str.empty() ? parse_shape("20,20,20,20") : parse_shape(a.shape_str);
    spec.seed = a.seed;
    std::size_t pos = 0;
    while (pos < a.synthetic.size()) {
      std::size_t next = a.synthetic.find(',', pos);
      if (next == std::string::npos) next = a.synthetic.size();
      const std::string tok = a.synthetic.substr(pos, next - pos);
      pos = next + 1;
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw std::runtime_error("bad --synthetic token: " + tok);
      const std::string key = trim(tok.substr(0, eq));
      const std::string val = trim(tok.substr(eq + 1));
      if (key == "R" || key == "rank") {
        spec.R = static_cast<tu1::Index>(std::stoll(val));
      } else if (key == "shape") {
        if (a.shape_str.empty()) spec.shape = parse_shape(val);
      } else if (key == "seed") {
        spec.seed = std::stoull(val);
      } else if (key == "source") {
        spec.source = val == "rand" ? tu1::FactorSource::RandomOrthogonal : tu1::FactorSource::Dcm;
      } else {
        throw std::runtime_error("unknown --synthetic key: " + key);
      }
    }
    m = tu1::gen_synthetic(spec);
    default_fam = tu1::matched_family(spec);
  } else if (!a.images_dir.empty()) {
    m = tu1::ingest_images(a.images_dir, a.shuffle, a.seed);
    image_valued = true;
  } else {
    m = tu1::read_tensor_real(a.input);
  }
  if (image_valued || !a.input.empty()) {
    // Generic data defaults to Fourier transforms on the first two modes and
    // learnable factors on the rest.
    tu1::TransformFamily f(m.order());
    for (int k = 0; k < m.order() && k < 2; ++k) f.set_fixed(k, tu1::dfm(m.extent(k)));
    for (int k = 2; k < m.order(); ++k) f.set_learnable(k);
    default_fam = f;
  }

  tu1::TransformFamily fam = default_fam;
  if (!a.transforms.empty()) {
    fam = parse_transforms(a.transforms, m.shape());
  } else {
    const std::string from_cfg = a.solver.transforms_from_config(m.order());
    if (!from_cfg.empty()) fam = parse_transforms(from_cfg, m.shape());
  }

  if (a.model == "tcsl") {
    a.solver.cfg.model = tu1::Model::TCSL;
    if (!a.pair.empty()) {
      if (!a.transforms.empty()) {
        throw std::runtime_error("--pair picks the transformed modes itself; drop --transforms");
      }
      if (m.order() != 4) throw std::runtime_error("--pair applies to 4-order tensors");
      const auto modes = parse_index_list(a.pair);
      if (modes.size() != 2) throw std::runtime_error("--pair wants two 1-based modes");
      tu1::TransformFamily f(m.order());
      for (const auto mo : modes) {
        if (mo < 1 || mo > m.order()) throw std::runtime_error("--pair mode out of range");
        f.set_learnable(static_cast<int>(mo - 1));
      }
      fam = f;
      a.solver.cfg.pair = default_slice_pair(fam);
    } else if (!a.slice_pair.empty()) {
      const auto modes = parse_index_list(a.slice_pair);
      if (modes.size() != 2) throw std::runtime_error("--slice-pair wants two 1-based modes");
      a.solver.cfg.pair =
          tu1::SliceModePair{static_cast<int>(modes[0] - 1), static_cast<int>(modes[1] - 1)};
    } else {
      a.solver.cfg.pair = default_slice_pair(fam);
    }
  } else if (a.model == "tcu1") {
    a.solver.cfg.model = tu1::Model::TCU1;
    if (!a.pair.empty() || !a.slice_pair.empty()) {
      throw std::runtime_error("--pair/--slice-pair apply to --model tcsl");
    }
  } else {
    throw std::runtime_error("unknown model: " + a.model + " (want tcu1|tcsl)");
  }

  tu1::MaskIndexSet mask;
  if (!a.mask_path.empty()) {
    const tu1::RTensor mt = tu1::read_tensor_real(a.mask_path);
    if (mt.shape() != m.shape()) throw std::runtime_error("mask shape does not match data");
    mask = mask_from_tensor(mt);
  } else {
    mask = tu1::gen_mask(m.shape(), a.p, tu1::detail::splitmix64(a.seed ^ 0xA5C3ull));
  }

  const auto t0 = std::chrono::steady_clock::now();
  const tu1::CompletionResult res = tu1::complete(m, mask, fam, a.solver.cfg);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::string rec_path = a.out + ".recovered.tu1t";
  const std::string diag_path = a.out + ".diagnostics.csv";
  const std::string metrics_path = a.out + ".metrics.json";
  tu1::write_tensor(rec_path, res.recovered);
  write_diagnostics_csv(diag_path, res.history);

  json metrics{{"shape", shape_str(m.shape())},
               {"model", a.model},
               {"seed", a.seed},
               {"observed_fraction", mask.sampling_rate()},
               {"converged", res.converged},
               {"iterations", res.iterations},
               {"objective", res.objective},
               {"terminal_residual", res.terminal_residual},
               {"terminal_relative_residual", res.terminal_relative_residual},
               {"max_y_norm", res.max_y_norm},
               {"y_bounded", res.y_bounded},
               {"eta_cap_warning", res.eta_cap_warning},
               {"max_unitarity_defect", res.max_unitarity_defect},
               {"max_support_violation", res.max_support_violation},
               {"elapsed_seconds", elapsed},
               {"recovered", rec_path},
               {"diagnostics", diag_path}};
  metrics["re"] = tu1::relative_error(m, res.recovered);
  if (image_valued) {
    // Normalized image stacks use peak 1.0 (255 applies to 8-bit exports).
    const double ps = tu1::psnr(m, res.recovered, 1.0);
    metrics["psnr"] = std::isinf(ps) ? json("inf") : json(ps);
    const auto frames = tu1::save_image_stack(res.recovered, a.out + ".frames");
    metrics["frames_dir"] = a.out + ".frames";
    metrics["frame_count"] = frames.size();
  }
  if (a.solver.cfg.track_procrustes) {
    metrics["procrustes_monotone"] = res.procrustes_monotone;
    metrics["procrustes_worst_increase"] = res.procrustes_worst_increase;
  }
  write_json(metrics_path, metrics);

  if (a.json_logs) {
    for (const auto& r : res.history) std::cout << record_to_json(r).dump() << '\n';
    json final_line = metrics;
    final_line["metrics"] = metrics_path;
    std::cout << final_line.dump() << '\n';
  } else {
    std::printf("%s in %d iters, re %.3e, residual %.3e (%.2fs)\n",
                res.converged ? "converged" : "max-iter", res.iterations,
                metrics["re"].get<double>(), res.terminal_relative_residual, elapsed);
    std::printf("metrics: %s\n", metrics_path.c_str());
  }
  return res.converged ? 0 : 2;
}

struct SweepArgs {
  std::string shape_str = "20,20,20,20";
  std::string r_list = "1,2,3,4,5,6,7,8,9,10";
  std::string p_list = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  int trials = 5;
  std::uint64_t seed = 0;
  std::string source = "dcm";
  int workers = 1;
  std::string model = "tcu1";
  std::string transforms;
  std::string out;
  bool json_logs = false;
  SolverOpts solver;
};

int run_sweep(SweepArgs& a) {
  a.solver.finalize(a.seed, &a.model, nullptr, nullptr, &a.transforms);
  tu1::SweepPlan plan;
  plan.shape = parse_shape(a.shape_str);
  plan.r_values = parse_index_list(a.r_list);
  plan.p_values = parse_double_list(a.p_list);
  plan.trials = a.trials;
  plan.base_seed = a.seed;
  plan.source = a.source == "rand" ? tu1::FactorSource::RandomOrthogonal : tu1::FactorSource::Dcm;
  plan.workers = a.workers;

  tu1::TransformFamily fam(static_cast<int>(plan.shape.size()));
  if (!a.transforms.empty()) {
    fam = parse_transforms(a.transforms, plan.shape);
  } else {
    tu1::SyntheticSpec probe;
    probe.shape = plan.shape;
    probe.R = 1;
    probe.basis_seed = plan.base_seed;
    probe.source = plan.source;
    fam = tu1::matched_family(probe);
  }
  if (a.model == "tcsl") {
    a.solver.cfg.model = tu1::Model::TCSL;
    a.solver.cfg.pair = default_slice_pair(fam);
  } else if (a.model != "tcu1") {
    throw std::runtime_error("unknown model: " + a.model);
  }

  const auto records = tu1::sweep(plan, fam, a.solver.cfg, a.out,
                                  [&](const tu1::ExperimentRecord& r) {
                                    if (a.json_logs) {
                                      json j{{"R", r.R},
                                             {"p", r.p},
                                             {"mean_re", r.mean_re},
                                             {"success", r.success},
                                             {"trials", r.trials},
                                             {"wall_seconds", r.wall_seconds}};
                                      std::cout << j.dump() << '\n';
                                    } else {
                                      std::printf("R=%lld p=%.3g mean_re=%.3e %s (%.1fs)\n",
                                                  static_cast<long long>(r.R), r.p, r.mean_re,
                                                  r.success ? "ok" : "fail", r.wall_seconds);
                                    }
                                  });
  int successes = 0;
  for (const auto& r : records) successes += r.success ? 1 : 0;
  if (a.json_logs) {
    json j{{"cells", records.size()}, {"successes", successes}, {"csv", a.out}};
    std::cout << j.dump() << '\n';
  } else {
    std::printf("%zu cells, %d successful; csv: %s\n", records.size(), successes, a.out.c_str());
  }
  return 0;
}

struct DecomposeArgs {
  std::string input;
  std::string slice_pair = "1,2";
  tu1::Index rank = 1;
  int iters = 50;
  std::string transforms;
  std::string out = "tu1_dec";
  bool sparsity = false;
  bool json_logs = false;
};

int run_decompose(const DecomposeArgs& a) {
  const tu1::RTensor m = tu1::read_tensor_real(a.input);
  tu1::TransformFamily fam(m.order());
  if (!a.transforms.empty()) {
    fam = parse_transforms(a.transforms, m.shape());
  } else {
    for (int k = 2; k < m.order(); ++k) fam.set_learnable(k);
  }
  const auto modes = parse_index_list(a.slice_pair);
  if (modes.size() != 2) throw std::runtime_error("--slice-pair wants two 1-based modes");
  const tu1::SliceModePair pair{static_cast<int>(modes[0] - 1), static_cast<int>(modes[1] - 1)};

  json summary{{"input", a.input}, {"shape", shape_str(m.shape())}, {"target_rank", a.rank}};
  if (a.sparsity) {
    tu1::TransformFamily full = fam;
    for (int k : full.learnable_modes()) full.set_identity(k);
    const tu1::TdstSparsity st = tu1::tdst_sparsity(m, full);
    summary["sparsity"] = json{{"u0", st.u0},
                               {"u1", st.u1},
                               {"energy_levels", st.energy_levels},
                               {"energy_counts", st.energy_counts}};
  }

  const tu1::TdslResult<double> dec = tu1::tdsl_decompose(m, fam, pair, a.rank, a.iters);
  const std::string core_path = a.out + ".core.tu1t";
  tu1::write_tensor(core_path, dec.Z1);
  summary["core"] = core_path;
  summary["achieved_rank"] = dec.r;
  summary["residual"] = dec.residual;
  summary["relative_residual"] = dec.residual / std::max(tu1::frobenius_norm(m), 1e-300);
  summary["residual_history"] = dec.residual_history;
  const auto learnable = fam.learnable_modes();
  std::vector<std::string> factor_paths;
  for (std::size_t i = 0; i < learnable.size(); ++i) {
    const tu1::Matrix<double>& u = dec.U[i];
    tu1::RTensor ut({u.rows(), u.cols()});
    for (tu1::Index c = 0; c < u.cols(); ++c) {
      for (tu1::Index r = 0; r < u.rows(); ++r) ut(r, c) = u(r, c);
    }
    const std::string path = a.out + ".U" + std::to_string(learnable[i] + 1) + ".tu1t";
    tu1::write_tensor(path, ut);
    factor_paths.push_back(path);
  }
  summary["factors"] = factor_paths;
  write_json(a.out + ".json", summary);
  if (a.json_logs) {
    std::cout << summary.dump() << '\n';
  } else {
    std::printf("rank %lld residual %.3e -> %s.json\n", static_cast<long long>(dec.r),
                dec.residual, a.out.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"t-SVD style tensor completion with learnable unitary transforms"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* s_synth = app.add_subcommand("synth", "generate a low-rank synthetic tensor");
  s_synth->add_option("--shape", synth.shape_str, "extents, e.g. 20,20,20,20");
  s_synth->add_option("--rank,-R", synth.rank, "core rank per mode");
  s_synth->add_option("--seed", synth.seed, "RNG seed");
  s_synth->add_option("--source", synth.source, "atom basis: dcm|rand")
      ->check(CLI::IsMember({"dcm", "rand"}));
  s_synth->add_option("--out", synth.out, "output tensor file")->required();
  s_synth->add_option("--p", synth.p, "also sample a mask with this observed fraction");
  s_synth->add_option("--mask-out", synth.mask_out, "mask tensor output file");
  s_synth->add_flag("--json-logs", synth.json_logs, "machine-readable stdout");

  CompleteArgs comp;
  CLI::App* s_comp = app.add_subcommand("complete", "run tensor completion");
  s_comp->add_option("--input", comp.input, "input tensor file");
  s_comp->add_option("--images", comp.images_dir, "directory of equal-sized images");
  s_comp->add_flag("--shuffle", comp.shuffle, "shuffle image order (seeded)");
  s_comp->add_option("--synthetic", comp.synthetic, "generate input, e.g. R=3 or R=3,shape=20x20x20x20");
  s_comp->add_option("--shape", comp.shape_str, "shape for --synthetic");
  s_comp->add_option("--mask", comp.mask_path, "mask tensor file (nonzero = observed)");
  s_comp->add_option("--p", comp.p, "observed fraction for a seeded random mask");
  s_comp->add_option("--seed", comp.seed, "RNG seed");
  s_comp->add_option("--model", comp.model, "completion model: tcu1|tcsl")
      ->check(CLI::IsMember({"tcu1", "tcsl"}));
  s_comp->add_option("--pair", comp.pair, "tcsl transformed-mode pair, 1-based (4-order inputs)");
  s_comp->add_option("--slice-pair", comp.slice_pair, "tcsl slice-mode pair, 1-based");
  s_comp->add_option("--transforms", comp.transforms,
                     "per-mode roles, e.g. dcm,dcm,learnable,learnable");
  s_comp->add_option("--out", comp.out, "output prefix");
  s_comp->add_flag("--json-logs", comp.json_logs, "JSON-lines diagnostics on stdout");
  comp.solver.add_to(s_comp);

  SweepArgs sw;
  CLI::App* s_sweep = app.add_subcommand("sweep", "rank x sampling-rate phase sweep");
  s_sweep->add_option("--shape", sw.shape_str, "extents");
  s_sweep->add_option("--r-list", sw.r_list, "ranks, e.g. 1,3,5,7");
  s_sweep->add_option("--p-list", sw.p_list, "observed fractions, e.g. 0.3,0.5,0.7");
  s_sweep->add_option("--trials", sw.trials, "trials per cell (mean RE decides success)");
  s_sweep->add_option("--seed", sw.seed, "base seed");
  s_sweep->add_option("--source", sw.source, "atom basis: dcm|rand")
      ->check(CLI::IsMember({"dcm", "rand"}));
  s_sweep->add_option("--workers", sw.workers, "concurrent cells");
  s_sweep->add_option("--model", sw.model, "completion model: tcu1|tcsl")
      ->check(CLI::IsMember({"tcu1", "tcsl"}));
  s_sweep->add_option("--transforms", sw.transforms, "per-mode roles (default: matched to data)");
  s_sweep->add_option("--out", sw.out, "output CSV (resumable)")->required();
  s_sweep->add_flag("--json-logs", sw.json_logs, "JSON-lines records on stdout");
  sw.solver.add_to(s_sweep);

  DecomposeArgs dec;
  CLI::App* s_dec = app.add_subcommand("decompose", "slice-wise low-rank decomposition");
  s_dec->add_option("--input", dec.input, "input tensor file")->required();
  s_dec->add_option("--slice-pair", dec.slice_pair, "slice-mode pair, 1-based");
  s_dec->add_option("--rank,-r", dec.rank, "target slice rank")->required();
  s_dec->add_option("--iters", dec.iters, "alternation cap");
  s_dec->add_option("--transforms", dec.transforms, "per-mode roles");
  s_dec->add_option("--out", dec.out, "output prefix");
  s_dec->add_flag("--sparsity", dec.sparsity, "also report transform-domain sparsity stats");
  s_dec->add_flag("--json-logs", dec.json_logs, "machine-readable stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (s_synth->parsed()) return run_synth(synth);
    if (s_comp->parsed()) return run_complete(comp);
    if (s_sweep->parsed()) return run_sweep(sw);
    if (s_dec->parsed()) return run_decompose(dec);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
