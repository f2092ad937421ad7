#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blurvid/solver.hpp"

namespace blurvid::cli {

namespace fs = std::filesystem;

struct ExtractOptions {
  fs::path blurred;
  std::vector<fs::path> alphas;  // one per object, composited in this order
  std::optional<fs::path> config;
  std::optional<int> frames;
  std::optional<std::uint64_t> seed;
  fs::path out;
};

struct SynthesizeOptions {
  fs::path sharp;
  fs::path alpha;
  std::string motion;
  int frames = 7;
  double noise = 0.01;
  fs::path out;
};

struct EvaluateOptions {
  fs::path result;
  fs::path truth;
};

// Noise in `synthesize` is drawn from this fixed seed; the command has no
// seed flag.
inline constexpr std::uint64_t kSynthesizeNoiseSeed = 0;

// Flat JSON object with exactly the SolverConfig field names. Keys that are
// absent keep the value in `base`; unknown keys are an error.
SolverConfig config_from_json(const nlohmann::json& j, SolverConfig base = {});
SolverConfig load_config(const fs::path& path, SolverConfig base = {});
nlohmann::json config_to_json(const SolverConfig& cfg);

// "translate T", "rotate RADIANS", "zoom S" or "matrix t11 t12 t13 t21 t22 t23".
// translate moves along x only.
AffineParams parse_motion(const std::string& spec);

// Name of frame i (1-based): frame_01.png ... frame_NN.png.
std::string frame_name(int i);

// Frames of a directory in index order, stopping at the first gap.
std::vector<fs::path> list_frames(const fs::path& dir);

// Each command throws blurvid::Error on failure.
void run_extract(const ExtractOptions& opt);
void run_synthesize(const SynthesizeOptions& opt);
void run_evaluate(const EvaluateOptions& opt);

// Multi-object output: object layers over the first object's background, in
// the given order.
VideoClip composite_objects(const std::vector<ExtractionResult>& objects, int n);

// Full command line entry point. Returns the process exit status; failures
// print one "blurvid: error: ..." line to stderr.
int main_entry(int argc, const char* const* argv);

}  // namespace blurvid::cli
