#include "vslam/simworld.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

namespace vslam {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2)));
}

double hash_unit(std::uint64_t h) {  // [0, 1)
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// World-to-camera pose at the given center looking along view_dir with the
// world +z axis mapped near image-down.
PoseSE3 look_at(const Vec3& center, const Vec3& view_dir) {
  const Vec3 z = view_dir.normalized();
  Vec3 x = z.cross(Vec3(0, 0, 1));
  if (x.norm() < 1e-6) x = z.cross(Vec3(0, 1, 0));
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 cam_to_world;
  cam_to_world.col(0) = x;
  cam_to_world.col(1) = y;
  cam_to_world.col(2) = z;
  const Quat q(cam_to_world.transpose());
  return {q, -(q * center)};
}

PinholeCamera default_camera() {
  PinholeCamera cam;
  cam.fx = 460.0;
  cam.fy = 460.0;
  cam.cx = 376.0;
  cam.cy = 240.0;
  cam.width = 752;
  cam.height = 480;
  return cam;
}

struct PathPoint {
  Vec3 center;
  Vec3 view_dir;
};

// Square of half-side r with rounded corners (radius rho), traversed CCW,
// parameterized by normalized arc length u in [0, 1); view points outward.
PathPoint square_loop_point(double u, double r, double rho) {
  const double straight = 2.0 * (r - rho);
  const double arc = 0.5 * kPi * rho;
  const double perimeter = 4.0 * straight + 4.0 * arc;
  double s = std::fmod(u, 1.0) * perimeter;
  if (s < 0) s += perimeter;

  // Segments: side 0 (bottom, +x), corner 0, side 1 (right, +y), corner 1,
  // side 2 (top, -x), corner 2, side 3 (left, -y), corner 3.
  for (int k = 0; k < 4; ++k) {
    const double angle = 0.5 * kPi * k;
    const double ca = std::cos(angle), sa = std::sin(angle);
    auto rotate = [&](const Vec3& p) {
      return Vec3(ca * p.x() - sa * p.y(), sa * p.x() + ca * p.y(), p.z());
    };
    if (s < straight) {
      const Vec3 local(-(r - rho) + s, -r, 0.0);
      return {rotate(local), rotate(Vec3(0, -1, 0))};
    }
    s -= straight;
    if (s < arc) {
      const double t = s / rho;  // corner angle swept
      const Vec3 corner_center(r - rho, -(r - rho), 0.0);
      const Vec3 local = corner_center +
                         rho * Vec3(std::sin(t), -std::cos(t), 0.0);
      const Vec3 outward(std::sin(t), -std::cos(t), 0.0);
      return {rotate(local), rotate(outward)};
    }
    s -= arc;
  }
  return {Vec3(-(r - rho), -r, 0), Vec3(0, -1, 0)};  // unreachable
}

Eigen::VectorXf random_unit_descriptor(std::mt19937_64& rng, int dim) {
  std::normal_distribution<float> n(0.f, 1.f);
  Eigen::VectorXf d(dim);
  for (int i = 0; i < dim; ++i) d(i) = n(rng);
  const float norm = d.norm();
  if (norm > 1e-9f) d /= norm;
  return d;
}

}  // namespace

Result<SyntheticScene> generate_scene(const SceneSpec& spec_in,
                                      std::uint64_t seed) {
  if (spec_in.landmark_count < 1 || spec_in.frame_count < 1)
    return Fail::InsufficientData;

  SyntheticScene scene;
  scene.spec = spec_in;
  scene.seed = seed;
  if (!scene.spec.camera.valid()) scene.spec.camera = default_camera();
  const SceneSpec& spec = scene.spec;

  std::mt19937_64 rng(mix(seed, 0xA11CE));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> uz(-1.2, 1.2);

  // Landmarks on a shell around the path, facing the outward-looking camera.
  for (int i = 0; i < spec.landmark_count; ++i) {
    Landmark3 pos;
    switch (spec.trajectory) {
      case TrajectoryKind::Line: {
        // Wall parallel to the +x motion at distance landmark_extent.
        const double len = spec.path_extent;
        pos = Vec3(-0.3 * len + 1.6 * len * u01(rng),
                   spec.landmark_extent + 2.0 * u01(rng), uz(rng));
        break;
      }
      case TrajectoryKind::SquareLoop: {
        // Walls of the outer square of half-side landmark_extent.
        const double side = 2.0 * spec.landmark_extent;
        const double along = side * u01(rng) - spec.landmark_extent;
        const double depth = spec.landmark_extent + 1.5 * u01(rng);
        switch (static_cast<int>(u01(rng) * 4.0) % 4) {
          case 0: pos = Vec3(along, -depth, uz(rng)); break;
          case 1: pos = Vec3(depth, along, uz(rng)); break;
          case 2: pos = Vec3(along, depth, uz(rng)); break;
          default: pos = Vec3(-depth, along, uz(rng)); break;
        }
        break;
      }
      case TrajectoryKind::Circle:
      case TrajectoryKind::ShakeOverlay:
      default: {
        const double theta = 2.0 * kPi * u01(rng);
        const double radius = spec.landmark_extent + 1.5 * u01(rng);
        pos = Vec3(radius * std::cos(theta), radius * std::sin(theta),
                   uz(rng));
        break;
      }
    }

    // Rejection-sample the descriptor until it is separated from the rest.
    bool accepted = false;
    for (int attempt = 0; attempt < 100 && !accepted; ++attempt) {
      Eigen::VectorXf d = random_unit_descriptor(rng, spec.descriptor_dim);
      accepted = true;
      for (const auto& lm : scene.landmarks) {
        if (std::abs(lm.descriptor.dot(d)) >= 0.8f) {
          accepted = false;
          break;
        }
      }
      if (accepted) scene.landmarks.push_back({pos, std::move(d)});
    }
    if (!accepted) return Fail::RejectionBudgetExceeded;
  }

  // Ground-truth trajectory at the configured rate.
  const double dt = 1.0 / spec.frame_rate_hz;
  for (int i = 0; i < spec.frame_count; ++i) {
    const double u =
        spec.laps * static_cast<double>(i) / spec.frame_count;
    PathPoint pp;
    switch (spec.trajectory) {
      case TrajectoryKind::Line:
        pp.center = Vec3(spec.path_extent * u, 0, 0);
        pp.view_dir = Vec3(0, 1, 0);
        break;
      case TrajectoryKind::SquareLoop:
        pp = square_loop_point(u, spec.path_extent, 0.3 * spec.path_extent);
        break;
      case TrajectoryKind::Circle:
      case TrajectoryKind::ShakeOverlay:
      default: {
        const double theta = 2.0 * kPi * u;
        pp.center = spec.path_extent * Vec3(std::cos(theta), std::sin(theta), 0);
        pp.view_dir = Vec3(std::cos(theta), std::sin(theta), 0);
        break;
      }
    }
    PoseSE3 pose = look_at(pp.center, pp.view_dir);
    if (spec.trajectory == TrajectoryKind::ShakeOverlay) {
      // High-frequency orientation wobble baked into the ground truth.
      const double a = 2.0 * kPi / 180.0;
      const Vec3 w(a * std::sin(0.9 * i), a * std::sin(1.3 * i + 1.0),
                   a * std::sin(0.7 * i + 2.0));
      pose = PoseSE3(so3_exp(w) * pose.rotation(),
                     so3_exp(w) * pose.translation());
    }
    scene.trajectory.push(i * dt, pose);
  }
  return scene;
}

void script_challenge(SyntheticScene& scene, ChallengeKind kind,
                      int begin_frame, int end_frame) {
  if (begin_frame >= end_frame) return;  // empty interval: no-op
  scene.challenges.push_back({kind, begin_frame, end_frame});
}

namespace {

struct FrameModifiers {
  double confidence_scale = 1.0;
  bool weak_texture = false;
  bool shake = false;
};

FrameModifiers modifiers_for(const SyntheticScene& scene, int frame_index) {
  FrameModifiers m;
  for (const auto& ch : scene.challenges) {
    if (frame_index < ch.begin_frame || frame_index >= ch.end_frame) continue;
    switch (ch.kind) {
      case ChallengeKind::Lowlight: m.confidence_scale *= 0.4; break;
      case ChallengeKind::WeakTexture: m.weak_texture = true; break;
      case ChallengeKind::Shake: m.shake = true; break;
    }
  }
  return m;
}

RenderedFrame render_impl(const SyntheticScene& scene, const PoseSE3& gt_pose,
                          std::uint64_t frame_seed,
                          const FrameModifiers& mods) {
  const SceneSpec& spec = scene.spec;
  const PinholeCamera& cam = spec.camera;
  std::mt19937_64 rng(frame_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  PoseSE3 render_pose = gt_pose;
  if (mods.shake) {
    const double a = 5.0 * kPi / 180.0;
    const Vec3 w(a * (2 * u01(rng) - 1), a * (2 * u01(rng) - 1),
                 a * (2 * u01(rng) - 1));
    render_pose = PoseSE3(so3_exp(w) * gt_pose.rotation(),
                          so3_exp(w) * gt_pose.translation());
  }

  RenderedFrame out;
  out.features.image_width = cam.width;
  out.features.image_height = cam.height;
  out.detection.grid_width = 400;
  out.detection.grid_height = 300;
  out.detection.descriptor_dim = spec.descriptor_dim;
  out.detection.background_seed = mix(frame_seed, 0xBA5E);

  struct Pending {
    Vec2 px;
    float score;
    int label;
    Eigen::VectorXf descriptor;
  };
  std::vector<Pending> pending;

  for (int li = 0; li < static_cast<int>(scene.landmarks.size()); ++li) {
    if (mods.weak_texture &&
        hash_unit(mix(mix(scene.seed, 0x3EA7), li)) < 0.7)
      continue;
    const auto& lm = scene.landmarks[li];
    auto px = project(cam, render_pose, lm.position);
    if (!px || !cam.contains(*px)) continue;

    double score = spec.confidence_mean + spec.confidence_sigma * gauss(rng);
    score = std::clamp(score * mods.confidence_scale, 0.0, 1.0);

    Vec2 noisy = *px;
    if (spec.noise.pixel_sigma > 0) {
      double sigma = spec.noise.pixel_sigma;
      if (spec.noise.confidence_noise_coupling)
        sigma *= std::clamp(spec.confidence_mean / std::max(score, 0.05), 0.5,
                            3.0);
      noisy += Vec2(sigma * gauss(rng), sigma * gauss(rng));
      if (!cam.contains(noisy)) continue;
    } else {
      gauss(rng);  // keep the stream layout independent of the noise setting
      gauss(rng);
    }

    Eigen::VectorXf d = lm.descriptor;
    if (spec.noise.descriptor_sigma > 0) {
      for (int k = 0; k < d.size(); ++k)
        d(k) += static_cast<float>(spec.noise.descriptor_sigma * gauss(rng));
      d.normalize();
    }
    pending.push_back({noisy, static_cast<float>(score), li, std::move(d)});

    if (spec.noise.outlier_rate > 0 && u01(rng) < spec.noise.outlier_rate) {
      Pending o;
      o.px = Vec2(u01(rng) * (cam.width - 1), u01(rng) * (cam.height - 1));
      o.score = static_cast<float>(std::clamp(
          spec.confidence_mean + spec.confidence_sigma * gauss(rng), 0.0, 1.0));
      o.label = -1;
      o.descriptor = random_unit_descriptor(rng, spec.descriptor_dim);
      pending.push_back(std::move(o));
    }
  }

  out.features.descriptors.resize(static_cast<int>(pending.size()),
                                  spec.descriptor_dim);
  const double gx = static_cast<double>(out.detection.grid_width) / cam.width;
  const double gy =
      static_cast<double>(out.detection.grid_height) / cam.height;
  for (size_t i = 0; i < pending.size(); ++i) {
    auto& p = pending[i];
    out.features.keypoints.push_back(p.px);
    out.features.scores.push_back(p.score);
    out.features.descriptors.row(static_cast<int>(i)) = p.descriptor;
    out.labels.push_back(p.label);
    out.detection.spikes.push_back(
        {p.px.x() * gx, p.px.y() * gy, p.score, p.label,
         std::move(p.descriptor)});
  }
  return out;
}

}  // namespace

RenderedFrame render_frame(const SyntheticScene& scene, int frame_index) {
  const auto mods = modifiers_for(scene, frame_index);
  return render_impl(scene, scene.trajectory.samples[frame_index].pose,
                     mix(scene.seed, static_cast<std::uint64_t>(frame_index)),
                     mods);
}

RenderedFrame render_at(const SyntheticScene& scene, const PoseSE3& pose) {
  std::uint64_t h = mix(scene.seed, 0x705E);
  auto fold = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    h = mix(h, bits);
  };
  fold(pose.rotation().w());
  fold(pose.rotation().x());
  fold(pose.rotation().y());
  fold(pose.rotation().z());
  fold(pose.translation().x());
  fold(pose.translation().y());
  fold(pose.translation().z());
  return render_impl(scene, pose, h, {});
}

PoseSE3 stereo_right_pose(const PoseSE3& left, double baseline) {
  // Rectified pair: the right camera sits +baseline along the left camera's
  // x axis, so camera coordinates shift by -baseline in x.
  return PoseSE3(Quat::Identity(), Vec3(-baseline, 0, 0)) * left;
}

namespace {

// Deterministic unit descriptor for background cells, from a stateless hash.
void background_descriptor(std::uint64_t seed, int dim,
                           std::span<float> out) {
  double norm = 0.0;
  for (int k = 0; k + 1 < dim; k += 2) {
    const double u1 =
        std::max(hash_unit(splitmix64(seed + static_cast<std::uint64_t>(k))),
                 1e-12);
    const double u2 =
        hash_unit(splitmix64(seed + static_cast<std::uint64_t>(k) + 0x5EED));
    const double r = std::sqrt(-2.0 * std::log(u1));
    out[k] = static_cast<float>(r * std::cos(2.0 * kPi * u2));
    out[k + 1] = static_cast<float>(r * std::sin(2.0 * kPi * u2));
    norm += out[k] * out[k] + out[k + 1] * out[k + 1];
  }
  if (dim % 2) {
    out[dim - 1] = 0.f;
  }
  norm = std::sqrt(std::max(norm, 1e-12));
  for (int k = 0; k < dim; ++k) out[k] /= static_cast<float>(norm);
}

// Descriptor grid over the staged spikes: cells within reach of a spike take
// its descriptor, everything else gets a seeded pseudo-random unit vector.
class SpikeDescriptorGrid final : public DescriptorGrid {
 public:
  SpikeDescriptorGrid(const SparseFrame& frame)
      : width_(frame.grid_width), height_(frame.grid_height),
        dim_(frame.descriptor_dim), seed_(frame.background_seed) {
    spikes_.reserve(frame.spikes.size());
    for (const auto& s : frame.spikes)
      spikes_.push_back({s.x, s.y, s.descriptor});
  }

  int width() const override { return width_; }
  int height() const override { return height_; }
  int dim() const override { return dim_; }

  void cell(int row, int col, std::span<float> out) const override {
    double best_d2 = 9.0;  // spikes own a 3-cell neighborhood
    const Eigen::VectorXf* best = nullptr;
    for (const auto& s : spikes_) {
      const double d2 = (s.x - col) * (s.x - col) + (s.y - row) * (s.y - row);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = &s.descriptor;
      }
    }
    if (best) {
      std::copy(best->data(), best->data() + dim_, out.begin());
      return;
    }
    background_descriptor(
        mix(seed_, static_cast<std::uint64_t>(row) * width_ + col), dim_, out);
  }

 private:
  struct Entry {
    double x, y;
    Eigen::VectorXf descriptor;
  };
  int width_, height_, dim_;
  std::uint64_t seed_;
  std::vector<Entry> spikes_;
};

}  // namespace

Result<ScoreField> SyntheticDetector::detect(const ImageF& resized_gray) {
  if (staged_.grid_width <= 0 || staged_.grid_height <= 0)
    return Fail::BackendFailure;
  if (!resized_gray.empty() && (resized_gray.width != staged_.grid_width ||
                                resized_gray.height != staged_.grid_height))
    return Fail::BackendFailure;

  ScoreField field;
  field.scores = ImageF(staged_.grid_width, staged_.grid_height);
  // Low textured background with deterministic variation.
  for (int r = 0; r < field.scores.height; ++r) {
    for (int c = 0; c < field.scores.width; ++c) {
      const std::uint64_t h = mix(staged_.background_seed,
                                  static_cast<std::uint64_t>(r) * 40009 + c);
      field.scores.at(r, c) =
          staged_.background_level + 0.005f * static_cast<float>(hash_unit(h));
    }
  }
  // Gaussian blob per spike; log-parabola refinement in the extractor
  // recovers the sub-cell position.
  const double sigma = 0.7;
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  for (const auto& s : staged_.spikes) {
    const int c0 = static_cast<int>(std::lround(s.x));
    const int r0 = static_cast<int>(std::lround(s.y));
    for (int dr = -2; dr <= 2; ++dr) {
      const int r = r0 + dr;
      if (r < 0 || r >= field.scores.height) continue;
      for (int dc = -2; dc <= 2; ++dc) {
        const int c = c0 + dc;
        if (c < 0 || c >= field.scores.width) continue;
        const double d2 =
            (c - s.x) * (c - s.x) + (r - s.y) * (r - s.y);
        const float v = s.score * static_cast<float>(std::exp(-d2 * inv2s2));
        field.scores.at(r, c) = std::max(field.scores.at(r, c), v);
      }
    }
  }
  field.descriptors = std::make_shared<SpikeDescriptorGrid>(staged_);
  return field;
}

bool save_sparse_frame(const SparseFrame& frame, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  const char magic[4] = {'V', 'S', 'F', '1'};
  out.write(magic, 4);
  auto put32 = [&out](std::int32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
  };
  put32(frame.grid_width);
  put32(frame.grid_height);
  put32(frame.descriptor_dim);
  put32(static_cast<std::int32_t>(frame.spikes.size()));
  out.write(reinterpret_cast<const char*>(&frame.background_seed), 8);
  out.write(reinterpret_cast<const char*>(&frame.background_level), 4);
  for (const auto& s : frame.spikes) {
    const float xy[2] = {static_cast<float>(s.x), static_cast<float>(s.y)};
    out.write(reinterpret_cast<const char*>(xy), 8);
    out.write(reinterpret_cast<const char*>(&s.score), 4);
    put32(s.label);
    out.write(reinterpret_cast<const char*>(s.descriptor.data()),
              frame.descriptor_dim * 4);
  }
  return static_cast<bool>(out);
}

Result<SparseFrame> load_sparse_frame(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return Fail::BackendFailure;
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "VSF1", 4) != 0) return Fail::BackendFailure;
  auto get32 = [&in]() {
    std::int32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  SparseFrame frame;
  frame.grid_width = get32();
  frame.grid_height = get32();
  frame.descriptor_dim = get32();
  const int count = get32();
  in.read(reinterpret_cast<char*>(&frame.background_seed), 8);
  in.read(reinterpret_cast<char*>(&frame.background_level), 4);
  if (!in || frame.descriptor_dim <= 0 || count < 0) return Fail::BackendFailure;
  frame.spikes.resize(count);
  for (auto& s : frame.spikes) {
    float xy[2];
    in.read(reinterpret_cast<char*>(xy), 8);
    in.read(reinterpret_cast<char*>(&s.score), 4);
    s.label = get32();
    s.x = xy[0];
    s.y = xy[1];
    s.descriptor.resize(frame.descriptor_dim);
    in.read(reinterpret_cast<char*>(s.descriptor.data()),
            frame.descriptor_dim * 4);
  }
  if (!in) return Fail::BackendFailure;
  return frame;
}

bool export_scene_dataset(const SyntheticScene& scene,
                          const std::string& root) {
  namespace fs = std::filesystem;
  const fs::path cam_dir = fs::path(root) / "mav0" / "cam0";
  const fs::path data_dir = cam_dir / "data";
  const fs::path gt_dir =
      fs::path(root) / "mav0" / "state_groundtruth_estimate0";
  std::error_code ec;
  fs::create_directories(data_dir, ec);
  fs::create_directories(gt_dir, ec);
  if (ec) return false;

  std::ofstream csv(cam_dir / "data.csv");
  csv << "#timestamp [ns],filename\n";
  std::ofstream sensor(cam_dir / "sensor.txt");
  const PinholeCamera& cam = scene.spec.camera;
  sensor << "fx = " << cam.fx << "\nfy = " << cam.fy << "\ncx = " << cam.cx
         << "\ncy = " << cam.cy << "\nwidth = " << cam.width
         << "\nheight = " << cam.height
         << "\ndescriptor_dim = " << scene.spec.descriptor_dim << "\n";

  std::ofstream gt(gt_dir / "data.csv");
  gt << "#timestamp [ns], p_RS_R_x [m], p_RS_R_y [m], p_RS_R_z [m], q_RS_w [],"
        " q_RS_x [], q_RS_y [], q_RS_z []\n";
  gt.precision(17);

  for (int i = 0; i < scene.trajectory.size(); ++i) {
    const auto& sample = scene.trajectory.samples[i];
    const auto ns = static_cast<std::uint64_t>(
        std::llround(sample.timestamp * 1e9));
    const std::string name = std::to_string(ns) + ".feat";
    auto rendered = render_frame(scene, i);
    if (!save_sparse_frame(rendered.detection, (data_dir / name).string()))
      return false;
    csv << ns << ',' << name << '\n';

    const PoseSE3 cam_to_world = sample.pose.inverse();
    const Vec3& p = cam_to_world.translation();
    const Quat& q = cam_to_world.rotation();
    gt << ns << ',' << p.x() << ',' << p.y() << ',' << p.z() << ',' << q.w()
       << ',' << q.x() << ',' << q.y() << ',' << q.z() << '\n';
  }
  return static_cast<bool>(csv) && static_cast<bool>(gt);
}

}  // namespace vslam
