#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "blurvid/image_io.hpp"
#include "blurvid/metrics.hpp"
#include "blurvid/segmentation.hpp"

namespace blurvid::cli {

using nlohmann::json;

namespace {

json params_json(const AffineParams& p) { return json(std::vector<double>(p.theta.begin(), p.theta.end())); }

AffineParams params_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 6) throw InvalidArgument(where + ": expected 6 affine entries");
  AffineParams p;
  for (int i = 0; i < 6; ++i) {
    if (!j[i].is_number()) throw InvalidArgument(where + ": affine entries must be numbers");
    p.theta[i] = j[i].get<double>();
  }
  return p;
}

json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

json terms_json(const ObjectiveTerms& t) {
  return {{"data", t.data}, {"tv", t.tv}, {"affine_matrix", t.affine_matrix}, {"alpha", t.alpha}, {"total", t.total}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path.string() + ": malformed JSON: " + e.what());
  }
}

void make_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

void write_frames(const VideoClip& clip, const fs::path& dir) {
  for (std::size_t i = 0; i < clip.frames.size(); ++i) {
    save_image(clip.frames[i], dir / frame_name(static_cast<int>(i) + 1));
  }
}

void write_loss_trace(const ExtractionResult& r, const fs::path& path) {
  std::ostringstream os;
  os << "scale,iteration,data,tv,affine_matrix,alpha,total\n";
  os << std::setprecision(17);
  for (std::size_t s = 0; s < r.loss_trace.size(); ++s) {
    for (std::size_t t = 0; t < r.loss_trace[s].size(); ++t) {
      const ObjectiveTerms& v = r.loss_trace[s][t];
      os << s + 1 << ',' << t + 1 << ',' << v.data << ',' << v.tv << ',' << v.affine_matrix << ','
         << v.alpha << ',' << v.total << '\n';
    }
  }
  write_text(path, os.str());
}

json object_json(const ExtractionResult& r) {
  const AffineParams& p = r.params;
  json j = {{"params", params_json(p)},
            {"linear", {{p.theta[0], p.theta[1]}, {p.theta[3], p.theta[4]}}},
            {"translation", {p.theta[2], p.theta[5]}},
            {"params_init", params_json(r.params_init)}};
  for (auto it = r.loss_trace.rbegin(); it != r.loss_trace.rend(); ++it) {
    if (!it->empty()) {
      j["final_losses"] = terms_json(it->back());
      break;
    }
  }
  if (!j.contains("final_losses")) j["final_losses"] = nullptr;
  return j;
}

void write_object(const ExtractionResult& r, const fs::path& dir) {
  make_out_dir(dir);
  write_frames(r.clip, dir);
  write_json(dir / "params.json", object_json(r));
  write_loss_trace(r, dir / "loss_trace.csv");
}

void write_timing(const fs::path& dir, const std::string& command, double seconds) {
  write_json(dir / "timing.json", {{"command", command}, {"duration_seconds", seconds}});
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::optional<AffineParams> read_params(const fs::path& dir) {
  if (fs::exists(dir / "params.json")) return params_from_json(read_json(dir / "params.json").at("params"), (dir / "params.json").string());
  if (fs::exists(dir / "manifest.json")) {
    const json m = read_json(dir / "manifest.json");
    if (m.contains("params")) return params_from_json(m["params"], (dir / "manifest.json").string());
  }
  return std::nullopt;
}

json param_errors(const AffineParams& recovered, const AffineParams& truth) {
  auto errors = [&](const AffineParams& t) {
    std::vector<double> abs_err(6);
    json rel = json::array();
    double worst = 0.0;
    for (int i = 0; i < 6; ++i) {
      abs_err[i] = std::abs(recovered.theta[i] - t.theta[i]);
      worst = std::max(worst, abs_err[i]);
      if (std::abs(t.theta[i]) > 1e-12) {
        rel.push_back(abs_err[i] / std::abs(t.theta[i]));
      } else {
        rel.push_back(nullptr);
      }
    }
    return std::make_pair(json{{"reference", params_json(t)}, {"abs_error", abs_err}, {"rel_error", rel},
                               {"max_abs_error", worst}},
                          worst);
  };
  const auto [direct, direct_worst] = errors(truth);
  json out = {{"recovered", params_json(recovered)}, {"truth", params_json(truth)}, {"direct", direct}};
  std::string best = "direct";
  if (std::abs(truth.determinant()) >= kMinAbsDeterminant) {
    const auto [inverse, inverse_worst] = errors(invert(truth));
    out["inverse"] = inverse;
    if (inverse_worst < direct_worst) best = "inverse";
  } else {
    out["inverse"] = nullptr;
  }
  out["best_match"] = best;
  return out;
}

}  // namespace

SolverConfig config_from_json(const json& j, SolverConfig cfg) {
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "n_frames") {
        cfg.n_frames = value.get<int>();
      } else if (key == "w_tv") {
        cfg.weights.w_tv = value.get<double>();
      } else if (key == "w_alpha") {
        cfg.weights.w_alpha = value.get<double>();
      } else if (key == "w_l") {
        cfg.weights.w_l = value.get<double>();
      } else if (key == "w_t") {
        cfg.weights.w_t = value.get<double>();
      } else if (key == "lr_image") {
        cfg.lr_image = value.get<double>();
      } else if (key == "lr_affine") {
        cfg.lr_affine = value.get<double>();
      } else if (key == "iterations_per_scale") {
        cfg.iterations_per_scale = value.get<std::vector<int>>();
      } else if (key == "epsilon_init") {
        cfg.epsilon_init = value.get<double>();
      } else if (key == "epsilon_halving_period") {
        cfg.epsilon_halving_period = value.get<int>();
      } else if (key == "tv_variant") {
        cfg.tv_variant = parse_tv_variant(value.get<std::string>());
      } else if (key == "data_term") {
        cfg.data_term = parse_data_term(value.get<std::string>());
      } else if (key == "seed") {
        cfg.seed = value.get<std::uint64_t>();
      } else {
        throw InvalidArgument("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config value has the wrong type: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

SolverConfig load_config(const fs::path& path, SolverConfig base) {
  return config_from_json(read_json(path), std::move(base));
}

json config_to_json(const SolverConfig& cfg) {
  return {{"n_frames", cfg.n_frames},
          {"w_tv", cfg.weights.w_tv},
          {"w_alpha", cfg.weights.w_alpha},
          {"w_l", cfg.weights.w_l},
          {"w_t", cfg.weights.w_t},
          {"lr_image", cfg.lr_image},
          {"lr_affine", cfg.lr_affine},
          {"iterations_per_scale", cfg.iterations_per_scale},
          {"epsilon_init", cfg.epsilon_init},
          {"epsilon_halving_period", cfg.epsilon_halving_period},
          {"tv_variant", to_string(cfg.tv_variant)},
          {"data_term", to_string(cfg.data_term)},
          {"seed", cfg.seed}};
}

AffineParams parse_motion(const std::string& spec) {
  std::istringstream in(spec);
  std::string kind;
  in >> kind;
  std::vector<double> v;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InvalidArgument("motion '" + spec + "': '" + tok + "' is not a number");
    }
  }
  auto expect = [&](std::size_t count) {
    if (v.size() != count) {
      throw InvalidArgument("motion '" + spec + "': " + kind + " takes " + std::to_string(count) +
                            (count == 1 ? " number" : " numbers"));
    }
  };
  AffineParams p;
  if (kind == "translate") {
    expect(1);
    p = AffineParams::translation(v[0], 0.0);
  } else if (kind == "rotate") {
    expect(1);
    p = AffineParams::from_linear(std::cos(v[0]), -std::sin(v[0]), std::sin(v[0]), std::cos(v[0]));
  } else if (kind == "zoom") {
    expect(1);
    p = AffineParams::from_linear(v[0], 0.0, 0.0, v[0]);
  } else if (kind == "matrix") {
    expect(6);
    std::copy(v.begin(), v.end(), p.theta.begin());
  } else {
    throw InvalidArgument("motion '" + spec + "': expected translate, rotate, zoom or matrix");
  }
  for (double t : p.theta) {
    if (!std::isfinite(t)) throw InvalidArgument("motion '" + spec + "': entries must be finite");
  }
  require_invertible(p);
  return p;
}

std::string frame_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%02d.png", i);
  return buf;
}

std::vector<fs::path> list_frames(const fs::path& dir) {
  std::vector<fs::path> out;
  for (int i = 1;; ++i) {
    const fs::path p = dir / frame_name(i);
    if (!fs::exists(p)) break;
    out.push_back(p);
  }
  return out;
}

VideoClip composite_objects(const std::vector<ExtractionResult>& objects, int n) {
  if (objects.empty()) throw InvalidArgument("no objects to composite");
  const Image& base = objects.front().state.background;
  VideoClip clip;
  clip.params = objects.front().params;
  clip.middle_index = middle_index(n);
  clip.frames.assign(n, base);
  const int c = base.channels();
  for (const ExtractionResult& obj : objects) {
    require_same_shape(base, obj.state.foreground, "object foreground");
    const auto masks = propagate_masks(obj.state.middle_mask, obj.params, n);
    for (int i = 1; i <= n; ++i) {
      const int k = frame_offset(i, n);
      const Image fg = k == 0 ? obj.state.foreground
                              : grid_sample(obj.state.foreground,
                                            grid_generate(step_transform(obj.params, k), base.height(),
                                                          base.width()));
      Image& frame = clip.frames[i - 1];
      const Image& m = masks[i - 1];
      for (std::size_t p = 0; p < m.pixel_count(); ++p) {
        const double mv = m.data()[p];
        for (int ch = 0; ch < c; ++ch) {
          const std::size_t idx = p * c + ch;
          frame.data()[idx] = mv * fg.data()[idx] + (1.0 - mv) * frame.data()[idx];
        }
      }
    }
  }
  return clip;
}

void run_extract(const ExtractOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  if (opt.alphas.empty()) throw InvalidArgument("at least one --alpha is required");
  SolverConfig cfg;
  if (opt.config) cfg = load_config(*opt.config, cfg);
  if (opt.frames) cfg.n_frames = *opt.frames;
  if (opt.seed) cfg.seed = *opt.seed;
  cfg.validate();

  const Image blurred = load_image(opt.blurred);
  std::vector<Image> alphas;
  for (const fs::path& a : opt.alphas) {
    Image alpha = load_image(a);
    if (alpha.channels() != 1) throw ShapeError(a.string() + ": alpha map must be single-channel");
    require_same_extent(blurred, alpha, (a.string() + " vs " + opt.blurred.string()).c_str());
    alphas.push_back(std::move(alpha));
  }

  std::vector<ExtractionResult> results;
  for (const Image& alpha : alphas) results.push_back(extract(blurred, alpha, cfg));

  make_out_dir(opt.out);
  json objects = json::array();
  if (results.size() == 1) {
    write_object(results.front(), opt.out);
    objects.push_back(object_json(results.front()));
  } else {
    for (std::size_t k = 0; k < results.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "object_%02zu", k + 1);
      write_object(results[k], opt.out / name);
      json o = object_json(results[k]);
      o["dir"] = name;
      objects.push_back(o);
    }
    write_frames(composite_objects(results, cfg.n_frames), opt.out);
  }

  std::vector<std::string> alpha_paths;
  for (const fs::path& a : opt.alphas) alpha_paths.push_back(a.string());
  const json manifest = {{"command", "extract"},
                         {"inputs", {{"blurred", opt.blurred.string()}, {"alpha", alpha_paths},
                                     {"config", opt.config ? json(opt.config->string()) : json(nullptr)}}},
                         {"output_dir", opt.out.string()},
                         {"seed", cfg.seed},
                         {"config", config_to_json(cfg)},
                         {"n_frames", cfg.n_frames},
                         {"frames", [&] {
                            json f = json::array();
                            for (int i = 1; i <= cfg.n_frames; ++i) f.push_back(frame_name(i));
                            return f;
                          }()},
                         {"objects", objects}};
  write_timing(opt.out, "extract", seconds_since(start));
  write_json(opt.out / "manifest.json", manifest);
}

void run_synthesize(const SynthesizeOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  const AffineParams params = parse_motion(opt.motion);
  if (!(opt.noise >= 0.0) || !std::isfinite(opt.noise)) throw InvalidArgument("--noise must be >= 0");
  const Image sharp = load_image(opt.sharp);
  const Image alpha = load_image(opt.alpha);
  if (alpha.channels() != 1) throw ShapeError(opt.alpha.string() + ": alpha map must be single-channel");
  require_same_extent(sharp, alpha, (opt.alpha.string() + " vs " + opt.sharp.string()).c_str());
  const SyntheticCase c = synthesize_case(sharp, alpha, params, opt.frames, opt.noise, kSynthesizeNoiseSeed);

  make_out_dir(opt.out);
  save_image(c.blurred, opt.out / "blurred.png");
  save_image(c.alpha, opt.out / "alpha.png");
  write_frames(c.truth, opt.out);
  const json manifest = {{"command", "synthesize"},
                         {"inputs", {{"sharp", opt.sharp.string()}, {"alpha", opt.alpha.string()}}},
                         {"output_dir", opt.out.string()},
                         {"motion", opt.motion},
                         {"params", params_json(params)},
                         {"linear", {{params.theta[0], params.theta[1]}, {params.theta[3], params.theta[4]}}},
                         {"translation", {params.theta[2], params.theta[5]}},
                         {"n_frames", opt.frames},
                         {"noise_sigma", opt.noise},
                         {"noise_seed", kSynthesizeNoiseSeed}};
  write_timing(opt.out, "synthesize", seconds_since(start));
  write_json(opt.out / "manifest.json", manifest);
}

void run_evaluate(const EvaluateOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  const auto result_frames = list_frames(opt.result);
  const auto truth_frames = list_frames(opt.truth);
  if (result_frames.empty()) throw IoError("no frame_01.png in " + opt.result.string());
  if (truth_frames.empty()) throw IoError("no frame_01.png in " + opt.truth.string());
  if (result_frames.size() != truth_frames.size()) {
    throw ShapeError("frame count mismatch: " + std::to_string(result_frames.size()) + " in " +
                     opt.result.string() + ", " + std::to_string(truth_frames.size()) + " in " +
                     opt.truth.string());
  }

  const int n = static_cast<int>(result_frames.size());
  std::vector<Image> results, truths;
  for (int i = 0; i < n; ++i) {
    results.push_back(load_image(result_frames[i]));
    truths.push_back(load_image(truth_frames[i]));
    require_same_shape(results.back(), truths.back(), ("frame " + std::to_string(i + 1)).c_str());
  }
  // A blur does not reveal the direction of time, so the clip is also scored
  // against the truth played backwards.
  struct Scored {
    json frames = json::array();
    std::vector<Metrics> per_frame;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    double mean_mse = 0.0;  // decides the order; finite even when some frames match exactly
  };
  auto score = [&](bool reversed) {
    Scored s;
    for (int i = 0; i < n; ++i) {
      const Metrics m = compare(results[i], truths[reversed ? n - 1 - i : i]);
      s.per_frame.push_back(m);
      s.mean_psnr += m.psnr / n;
      s.mean_ssim += m.ssim / n;
      s.mean_mse += std::pow(10.0, -m.psnr / 10.0) / n;
      s.frames.push_back({{"index", i + 1}, {"psnr", number_or_inf(m.psnr)}, {"ssim", m.ssim}});
    }
    return s;
  };
  const Scored forward = score(false);
  const Scored backward = score(true);
  const int mid = middle_index(n);
  json report = {{"frame_count", n},
                 {"frames", forward.frames},
                 {"mean", {{"psnr", number_or_inf(forward.mean_psnr)}, {"ssim", forward.mean_ssim}}},
                 {"middle", {{"index", mid}, {"psnr", number_or_inf(forward.per_frame[mid - 1].psnr)},
                             {"ssim", forward.per_frame[mid - 1].ssim}}},
                 {"reversed",
                  {{"frames", backward.frames},
                   {"mean", {{"psnr", number_or_inf(backward.mean_psnr)}, {"ssim", backward.mean_ssim}}}}},
                 {"best_order", backward.mean_mse < forward.mean_mse ? "reversed" : "forward"}};
  const auto recovered = read_params(opt.result);
  const auto truth = read_params(opt.truth);
  report["params"] = recovered && truth ? param_errors(*recovered, *truth) : json(nullptr);

  write_json(opt.result / "metrics.json", report);
  const json manifest = {{"command", "evaluate"},
                         {"inputs", {{"result", opt.result.string()}, {"truth", opt.truth.string()}}},
                         {"output", (opt.result / "metrics.json").string()},
                         {"duration_seconds", seconds_since(start)}};
  write_json(opt.result / "evaluate_manifest.json", manifest);
}

int main_entry(int argc, const char* const* argv) {
  CLI::App app{"Extract a short sharp video from one motion-blurred image.", "blurvid"};
  app.require_subcommand(1);
  app.footer(
      "Solver settings come from, in increasing precedence: built-in defaults, the --config JSON file,\n"
      "then the --frames and --seed flags.");

  ExtractOptions ex;
  std::vector<std::string> alpha_args;
  std::string config_arg;
  int frames_arg = 7;
  std::uint64_t seed_arg = 0;
  auto* extract_cmd = app.add_subcommand("extract", "Recover the frames of each object in a blurred image");
  extract_cmd->add_option("--blurred", ex.blurred, "Blurred image (PNG/PGM/PPM)")->required();
  extract_cmd->add_option("--alpha", alpha_args, "Alpha map of one object; repeat for more objects")
      ->required();
  auto* config_opt = extract_cmd->add_option("--config", config_arg, "Flat JSON solver config");
  auto* frames_opt = extract_cmd->add_option("--frames", frames_arg, "Number of output frames (odd)");
  auto* seed_opt = extract_cmd->add_option("--seed", seed_arg, "Seed of the initial motion perturbation");
  extract_cmd->add_option("--out", ex.out, "Output directory")->required();

  SynthesizeOptions sy;
  auto* synth_cmd = app.add_subcommand("synthesize", "Blur a sharp image with a known affine motion");
  synth_cmd->add_option("--sharp", sy.sharp, "Sharp image")->required();
  synth_cmd->add_option("--alpha", sy.alpha, "Binary mask of the moving object")->required();
  synth_cmd
      ->add_option("--motion", sy.motion,
                   "\"translate T\", \"rotate RAD\", \"zoom S\" or \"matrix t11 t12 t13 t21 t22 t23\"")
      ->required();
  synth_cmd->add_option("--frames", sy.frames, "Number of frames (odd)")->capture_default_str();
  synth_cmd->add_option("--noise", sy.noise, "Gaussian noise sigma")->capture_default_str();
  synth_cmd->add_option("--out", sy.out, "Output directory")->required();

  EvaluateOptions ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "Compare extracted frames with ground truth");
  eval_cmd->add_option("--result", ev.result, "Directory written by extract")->required();
  eval_cmd->add_option("--truth", ev.truth, "Directory written by synthesize")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (extract_cmd->parsed()) {
      for (const std::string& a : alpha_args) ex.alphas.emplace_back(a);
      if (config_opt->count() > 0) ex.config = config_arg;
      if (frames_opt->count() > 0) ex.frames = frames_arg;
      if (seed_opt->count() > 0) ex.seed = seed_arg;
      run_extract(ex);
    } else if (synth_cmd->parsed()) {
      run_synthesize(sy);
    } else if (eval_cmd->parsed()) {
      run_evaluate(ev);
    }
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::fprintf(stderr, "blurvid: error: %s\n", msg.c_str());
    return 1;
  }
  return 0;
}

}  // namespace blurvid::cli
