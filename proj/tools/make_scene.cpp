// Writes a synthetic sharp image and its object mask for `blurvid synthesize`.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>

#include "blurvid/image_io.hpp"
#include "blurvid/scenes.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a textured synthetic scene and its object mask.", "blurvid_scene"};
  std::string kind = "disk";
  int size = 128;
  int channels = 3;
  std::uint64_t seed = 0;
  double radius = 0.25, cx = 0.5, cy = 0.5;
  std::filesystem::path out;
  app.add_option("--kind", kind, "disk or ellipse")->check(CLI::IsMember({"disk", "ellipse"}))->capture_default_str();
  app.add_option("--size", size, "Width and height in pixels")->check(CLI::Range(8, 4096))->capture_default_str();
  app.add_option("--channels", channels, "1 or 3")->check(CLI::IsMember({1, 3}))->capture_default_str();
  app.add_option("--seed", seed, "Texture seed")->capture_default_str();
  app.add_option("--radius", radius, "Disk radius as a fraction of the size")->capture_default_str();
  app.add_option("--center-x", cx, "Disk center, fraction of the width")->capture_default_str();
  app.add_option("--center-y", cy, "Disk center, fraction of the height")->capture_default_str();
  app.add_option("--out", out, "Output directory (sharp.png, mask.png)")->required();
  CLI11_PARSE(app, argc, argv);

  try {
    const blurvid::Scene sc = kind == "disk"
                                  ? blurvid::disk_on_texture(size, size, channels, seed, radius, cx, cy)
                                  : blurvid::ellipse_on_texture(size, size, channels, seed);
    std::filesystem::create_directories(out);
    blurvid::save_image(sc.sharp, out / "sharp.png");
    blurvid::save_image(sc.mask, out / "mask.png");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "blurvid_scene: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
