// Regenerates the shipped simulator config (hand geometry, sensor rig and the
// inverse-kinematics pose table) and prints per-pose diagnostics.
//
//   thumbtrak-posegen [--out config/hand_v1.json]

#include "hand_sim.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>

using namespace thumbtrak;
using namespace thumbtrak::sim;

namespace {

constexpr double kRingRadiusMm = 12.0;
constexpr double kArcDeg = 160.0;
constexpr double kRayTiltDeg = 60.0;
constexpr double kNominalRotationDeg = 125.0;

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Solve the simulator pose table"};
  std::string out;
  bool quiet = false;
  double tilt = kRayTiltDeg, arc = kArcDeg;
  app.add_option("--tilt", tilt, "ray tilt toward the thumb tip (deg)");
  app.add_option("--arc", arc, "angular spread of the sensors (deg)");
  double rot = kNominalRotationDeg;
  app.add_option("--rotation", rot, "nominal ring rotation about the thumb (deg)");
  app.add_option("--out", out, "write the config JSON here");
  app.add_flag("--quiet", quiet, "suppress diagnostics");
  CLI11_PARSE(app, argc, argv);

  SimConfig config;
  config.hand = HandConfig::reference();
  config.rig = SensorRig::arc(kRingRadiusMm, arc, tilt);
  config.mount = RingMount{14.0, rot, 0.0};

  for (Pose p : kAllPoses) {
    const auto ik = solve_thumb_ik(config.hand, p);
    if (!quiet)
      std::printf("%-16s cmc_flex %6.1f cmc_abd %6.1f mcp %6.1f ip %6.1f  miss %.2f mm\n",
                  std::string(to_string(p)).c_str(), ik.thumb.cmc_flex, ik.thumb.cmc_abd, ik.thumb.mcp_flex,
                  ik.thumb.ip_flex, ik.error_mm);
  }
  std::fflush(stdout);
  config.poses = solve_pose_table(config.hand);

  if (!quiet) {
    std::printf("\nnoise-free distances (mm, '-' = out of range)\n%-16s", "");
    for (std::size_t i = 0; i < kSensorCount; ++i)
      std::printf("    S%zu", i + 1);
    std::printf("\n");
    for (Pose p : kAllLabels) {
      const auto d = true_distances(config.hand, config.poses[index_of(p)], config.mount, config.rig);
      std::printf("%-16s", std::string(to_string(p)).c_str());
      for (double v : d)
        v == kNoTarget ? std::printf("     -") : std::printf("%6.1f", v);
      std::printf("\n");
    }
    std::printf("\nring-local bearing of the contact target (deg, 0 = pad side)\n");
    for (Pose p : kAllPoses) {
      const auto posed = pose_hand(config.hand, config.poses[index_of(p)]);
      const Vec3 ex = posed.thumb_axis, ey = posed.thumb_pad_normal, ez = cross(ex, ey);
      const Vec3 d = contact_target(posed, p) - (posed.thumb_mcp + ex * config.mount.axial_mm);
      std::printf("%-16s %7.1f  (axial %.1f)\n", std::string(to_string(p)).c_str(),
                  std::atan2(dot(d, ez), dot(d, ey)) * 180.0 / 3.14159265, dot(d, ex));
    }
  }

  if (!out.empty()) {
    std::FILE *f = std::fopen(out.c_str(), "wb");
    if (!f) {
      std::cerr << "cannot write " << out << "\n";
      return 2;
    }
    const auto text = to_json(config) + "\n";
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
  }
  return 0;
}
