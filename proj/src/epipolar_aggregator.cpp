#include <algorithm>
#include <cmath>
#include <random>

#include "stview/parallel.hpp"
#include "stview/static_renderer.hpp"

namespace stview {

void AggregatorConfig::validate() const {
  if (n_blocks < 1 || n_ray_samples < 1 || feature_dim < 3) {
    throw Error(ErrorKind::kInvalidArgument,
                "aggregator: need n_blocks >= 1, n_ray_samples >= 1, feature_dim >= 3");
  }
  if (!auto_near_far && !(near > 0.0 && far >= near)) {
    throw Error(ErrorKind::kInvalidArgument, "aggregator: need 0 < near <= far");
  }
}

bool RayResult::all_masked() const {
  return !sample_all_masked.empty() &&
         std::all_of(sample_all_masked.begin(), sample_all_masked.end(), [](bool b) { return b; });
}

std::vector<Point3> sample_ray(const CameraModel& target, PixelCoord pixel, double near, double far,
                               int n_samples) {
  if (n_samples < 1 || !(near > 0.0) || !(far >= near)) {
    throw Error(ErrorKind::kInvalidArgument, "sample_ray: need n >= 1 and 0 < near <= far");
  }
  const Eigen::Vector3d dir = target.ray_direction(pixel);
  std::vector<Point3> out;
  out.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double z = n_samples == 1 ? near : near + (far - near) * i / (n_samples - 1);
    out.push_back(target.center() + z * dir);
  }
  return out;
}

std::pair<double, double> near_far_from_depths(const Scene& scene, std::span<const int> sources) {
  std::vector<double> depths;
  for (int s : sources) {
    for (float d : scene.frames.at(s).depth.data())
      if (std::isfinite(d) && d > 0.0f) depths.push_back(d);
  }
  if (depths.empty()) throw Error(ErrorKind::kInvalidArgument, "near/far: no finite source depths");
  std::sort(depths.begin(), depths.end());
  auto pct = [&](double q) {
    const double pos = q * (depths.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, depths.size() - 1);
    return depths[lo] + (pos - lo) * (depths[hi] - depths[lo]);
  };
  return {0.9 * pct(0.01), 1.1 * pct(0.99)};
}

double feature_stddev(std::span<const Eigen::VectorXd> features) {
  if (features.size() < 2) return 0.0;
  const Eigen::Index d = features.front().size();
  // Shifted by the first feature so identical features give exactly zero.
  const Eigen::VectorXd& ref = features.front();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& f : features) mean += f - ref;
  mean /= static_cast<double>(features.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (const auto& f : features) var += (f - ref - mean).cwiseAbs2();
  var /= static_cast<double>(features.size());
  return var.cwiseSqrt().mean();
}

namespace {

/// Softmax over the included entries; excluded entries get exactly 0.
std::vector<double> masked_softmax(std::span<const double> logits, const std::vector<bool>& include) {
  std::vector<double> out(logits.size(), 0.0);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < logits.size(); ++j)
    if (include[j]) peak = std::max(peak, logits[j]);
  double total = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (!include[j]) continue;
    out[j] = std::exp(logits[j] - peak);
    total += out[j];
  }
  for (double& v : out) v /= total;
  return out;
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(cols)));
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = normal(rng);
  return m;
}

}  // namespace

EpipolarAggregator::EpipolarAggregator(const AggregatorConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int d = cfg_.feature_dim;
  std::mt19937_64 rng(cfg_.weight_seed);
  embed_ = Eigen::MatrixXd::Zero(d, 3);
  embed_.topRows<3>().setIdentity();
  if (d > 3) embed_.bottomRows(d - 3) = random_matrix(rng, d - 3, 3);
  for (int p = 0; p < cfg_.n_blocks; ++p) {
    Block b;
    b.view_q = random_matrix(rng, d, d);
    b.view_k = random_matrix(rng, d, d);
    b.view_v = random_matrix(rng, d, d);
    b.ray_q = random_matrix(rng, d, d);
    b.ray_k = random_matrix(rng, d, d);
    b.ray_v = random_matrix(rng, d, d);
    blocks_.push_back(std::move(b));
  }
  to_rgb_ = random_matrix(rng, 3, d);
  to_rgb_bias_ = random_matrix(rng, 3, 1);
}

Eigen::VectorXd EpipolarAggregator::embed_rgb(const Rgb& rgb) const { return embed_ * rgb; }

ViewFeature EpipolarAggregator::gather_feature(const Point3& position, const FrameBundle& view) const {
  ViewFeature out;
  const Projection proj = view.camera.project(position);
  out.valid = proj.in_front() && proj.pixel.finite() && view.camera.contains(proj.pixel);
  PixelCoord u = proj.pixel;
  if (!u.finite()) u = {0.0, 0.0};
  out.feature = embed_rgb(sample_rgb(view.image, u));
  out.masked = sample_bilinear(view.dynamic_mask, u) > 0.0;
  return out;
}

std::vector<ViewFeature> EpipolarAggregator::gather_features(const Point3& position,
                                                             const Scene& scene,
                                                             std::span<const int> sources) const {
  std::vector<ViewFeature> out;
  out.reserve(sources.size());
  for (int s : sources) out.push_back(gather_feature(position, scene.frames.at(s)));
  return out;
}

std::vector<bool> EpipolarAggregator::included_views(std::span<const ViewFeature> views,
                                                     bool use_mask, bool* all_masked) const {
  std::vector<bool> include(views.size());
  bool any = false;
  for (std::size_t j = 0; j < views.size(); ++j) {
    include[j] = views[j].valid && !(use_mask && views[j].masked);
    any = any || include[j];
  }
  if (all_masked) *all_masked = false;
  if (any) return include;
  if (use_mask) {
    // Fall back to the vanilla aggregator for this sample.
    if (all_masked) *all_masked = true;
    return included_views(views, false, nullptr);
  }
  // Nothing valid: attend over everything (clamped samples).
  return std::vector<bool>(views.size(), true);
}

ViewStep EpipolarAggregator::view_transformer_step(int block, const Eigen::VectorXd& query,
                                                   std::span<const ViewFeature> views,
                                                   bool use_mask) const {
  if (views.empty()) throw Error(ErrorKind::kInvalidArgument, "view transformer needs >= 1 view");
  const Block& b = blocks_.at(block);
  ViewStep step;
  step.included = included_views(views, use_mask, &step.all_masked);
  const Eigen::VectorXd q = b.view_q * query;
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg_.feature_dim));
  std::vector<double> logits(views.size());
  for (std::size_t j = 0; j < views.size(); ++j) logits[j] = scale * q.dot(b.view_k * views[j].feature);
  step.weights = masked_softmax(logits, step.included);
  step.output = Eigen::VectorXd::Zero(cfg_.feature_dim);
  for (std::size_t j = 0; j < views.size(); ++j) {
    if (step.weights[j] != 0.0) step.output += step.weights[j] * (b.view_v * views[j].feature);
  }
  return step;
}

RayStep EpipolarAggregator::ray_transformer_step(int block,
                                                 std::span<const Eigen::VectorXd> features) const {
  const Block& b = blocks_.at(block);
  const std::size_t n = features.size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg_.feature_dim));
  std::vector<Eigen::VectorXd> keys(n), values(n);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(cfg_.feature_dim);
  for (std::size_t i = 0; i < n; ++i) {
    keys[i] = b.ray_k * features[i];
    values[i] = b.ray_v * features[i];
    mean += features[i];
  }
  mean /= static_cast<double>(n);
  const std::vector<bool> all(n, true);
  std::vector<double> logits(n);

  RayStep step;
  step.features.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd q = b.ray_q * features[i];
    for (std::size_t j = 0; j < n; ++j) logits[j] = scale * q.dot(keys[j]);
    const auto attn = masked_softmax(logits, all);
    Eigen::VectorXd mixed = Eigen::VectorXd::Zero(cfg_.feature_dim);
    for (std::size_t j = 0; j < n; ++j) mixed += attn[j] * values[j];
    step.features[i] = features[i] + mixed;
  }
  const Eigen::VectorXd q_mean = b.ray_q * mean;
  for (std::size_t j = 0; j < n; ++j) logits[j] = scale * q_mean.dot(keys[j]);
  step.attention = masked_softmax(logits, all);
  return step;
}

Eigen::VectorXd EpipolarAggregator::initial_feature(std::span<const ViewFeature> views,
                                                    bool use_mask) const {
  const std::vector<bool> include = included_views(views, use_mask, nullptr);
  Eigen::VectorXd out = Eigen::VectorXd::Constant(cfg_.feature_dim,
                                                  -std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < views.size(); ++j)
    if (include[j]) out = out.cwiseMax(views[j].feature);
  return out;
}

RayResult EpipolarAggregator::aggregate(std::span<const std::vector<ViewFeature>> samples,
                                        bool use_mask) const {
  const std::size_t n = samples.size();
  RayResult res;
  res.sample_all_masked.assign(n, false);
  std::vector<Eigen::VectorXd> features(n);
  for (std::size_t i = 0; i < n; ++i) features[i] = initial_feature(samples[i], use_mask);

  std::vector<Eigen::VectorXd> view_out(n);
  for (int p = 0; p < cfg_.n_blocks; ++p) {
    std::vector<double> spread(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const ViewStep vs = view_transformer_step(p, features[i], samples[i], use_mask);
      view_out[i] = vs.output;
      if (vs.all_masked) res.sample_all_masked[i] = true;
      std::vector<Eigen::VectorXd> keys;
      for (std::size_t j = 0; j < samples[i].size(); ++j)
        if (vs.included[j]) keys.push_back(blocks_[p].view_k * samples[i][j].feature);
      spread[i] = feature_stddev(keys);
    }
    RayStep rs = ray_transformer_step(p, view_out);
    features = std::move(rs.features);
    double sigma = 0.0;
    for (std::size_t i = 0; i < n; ++i) sigma += rs.attention[i] * spread[i];
    res.sigma.push_back(sigma);
  }

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(cfg_.feature_dim);
  for (const auto& f : features) mean += f;
  mean /= static_cast<double>(n);
  const Eigen::Vector3d logits = to_rgb_ * mean + to_rgb_bias_;
  for (int c = 0; c < 3; ++c) res.rgb[c] = 1.0 / (1.0 + std::exp(-logits[c]));
  return res;
}

RayResult EpipolarAggregator::render_ray(const CameraModel& target, PixelCoord pixel,
                                         const Scene& scene, std::span<const int> sources,
                                         double near, double far) const {
  if (sources.empty()) throw Error(ErrorKind::kInvalidArgument, "render_ray: no source views");
  const auto positions = sample_ray(target, pixel, near, far, cfg_.n_ray_samples);
  std::vector<std::vector<ViewFeature>> samples;
  samples.reserve(positions.size());
  for (const auto& x : positions) samples.push_back(gather_features(x, scene, sources));
  return aggregate(samples, cfg_.masked_attention);
}

StaticRender EpipolarAggregator::render(const CameraModel& target, const Scene& scene,
                                        std::span<const int> sources) const {
  const int w = target.width();
  const int h = target.height();
  auto [near, far] = cfg_.auto_near_far ? near_far_from_depths(scene, sources)
                                        : std::pair{cfg_.near, cfg_.far};
  StaticRender out{ImageF(w, h, 3), MaskU8(w, h, 1), {}};
  for (int p = 0; p < cfg_.n_blocks; ++p) out.diagnostics.emplace_back(w, h, 1);
  parallel_for(0, static_cast<std::size_t>(w) * h, cfg_.threads, [&](std::size_t idx) {
    const int x = static_cast<int>(idx % w);
    const int y = static_cast<int>(idx / w);
    const RayResult r = render_ray(target, {double(x), double(y)}, scene, sources, near, far);
    for (int c = 0; c < 3; ++c) out.rgb.at(x, y, c) = static_cast<float>(r.rgb[c]);
    out.coverage.at(x, y) = r.all_masked() ? 0 : 1;
    for (int p = 0; p < cfg_.n_blocks; ++p)
      out.diagnostics[p].at(x, y) = static_cast<float>(r.sigma[p]);
  });
  return out;
}

}  // namespace stview
