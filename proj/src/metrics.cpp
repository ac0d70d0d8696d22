#include <cmath>
#include <vector>

#include "stview/compositor.hpp"

namespace stview {

namespace {

void check_pair(const ImageF& a, const ImageF& b, const MaskU8* mask, const MaskU8* coverage) {
  if (!a.same_shape(b) || a.channels() != b.channels()) {
    throw Error(ErrorKind::kDimensionMismatch, "metric: images differ in shape");
  }
  if ((mask && !mask->same_shape(a)) || (coverage && !coverage->same_shape(a))) {
    throw Error(ErrorKind::kDimensionMismatch, "metric: mask differs in shape");
  }
}

bool selected(const MaskU8* mask, const MaskU8* coverage, int x, int y) {
  return (!mask || mask->at(x, y)) && (!coverage || coverage->at(x, y));
}

constexpr int kRadius = 5;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

}  // namespace

double mse(const ImageF& a, const ImageF& b, const MaskU8* mask, const MaskU8* coverage) {
  check_pair(a, b, mask, coverage);
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (!selected(mask, coverage, x, y)) continue;
      for (int c = 0; c < a.channels(); ++c) {
        const double d = static_cast<double>(a.at(x, y, c)) - b.at(x, y, c);
        sum += d * d;
      }
      count += a.channels();
    }
  }
  if (count == 0) throw Error(ErrorKind::kInvalidArgument, "metric: no pixels selected");
  return sum / static_cast<double>(count);
}

double psnr(const ImageF& a, const ImageF& b, const MaskU8* mask, const MaskU8* coverage) {
  const double m = mse(a, b, mask, coverage);
  if (m <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / m));
}

ImageF ssim_map(const ImageF& a, const ImageF& b) {
  check_pair(a, b, nullptr, nullptr);
  const int w = a.width();
  const int h = a.height();
  double kernel[2 * kRadius + 1];
  for (int i = -kRadius; i <= kRadius; ++i) kernel[i + kRadius] = std::exp(-(i * i) / (2 * kSigma * kSigma));

  ImageF out(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double total = 0.0;
      for (int c = 0; c < a.channels(); ++c) {
        double wsum = 0, ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int dy = -kRadius; dy <= kRadius; ++dy) {
          const int yy = y + dy;
          if (yy < 0 || yy >= h) continue;
          for (int dx = -kRadius; dx <= kRadius; ++dx) {
            const int xx = x + dx;
            if (xx < 0 || xx >= w) continue;
            const double k = kernel[dy + kRadius] * kernel[dx + kRadius];
            const double va = a.at(xx, yy, c);
            const double vb = b.at(xx, yy, c);
            wsum += k;
            ma += k * va;
            mb += k * vb;
            saa += k * va * va;
            sbb += k * vb * vb;
            sab += k * va * vb;
          }
        }
        ma /= wsum;
        mb /= wsum;
        const double var_a = std::max(0.0, saa / wsum - ma * ma);
        const double var_b = std::max(0.0, sbb / wsum - mb * mb);
        const double cov = sab / wsum - ma * mb;
        total += ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
                 ((ma * ma + mb * mb + kC1) * (var_a + var_b + kC2));
      }
      out.at(x, y) = static_cast<float>(total / a.channels());
    }
  }
  return out;
}

double ssim(const ImageF& a, const ImageF& b, const MaskU8* mask, const MaskU8* coverage) {
  check_pair(a, b, mask, coverage);
  const ImageF map = ssim_map(a, b);
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (!selected(mask, coverage, x, y)) continue;
      sum += map.at(x, y);
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorKind::kInvalidArgument, "metric: no pixels selected");
  return sum / static_cast<double>(count);
}

FrameMetrics evaluate_frame(const std::string& scene, const std::string& frame,
                            const ImageF& rendered, const ImageF& truth, const MaskU8* truth_dynamic,
                            const MaskU8* coverage) {
  FrameMetrics m;
  m.scene = scene;
  m.frame = frame;
  m.psnr_full = psnr(rendered, truth, nullptr, coverage);
  const ImageF map = ssim_map(rendered, truth);
  auto masked_mean = [&](auto&& pick) -> std::optional<double> {
    double sum = 0.0;
    std::size_t count = 0;
    for (int y = 0; y < map.height(); ++y)
      for (int x = 0; x < map.width(); ++x)
        if (pick(x, y) && (!coverage || coverage->at(x, y))) {
          sum += map.at(x, y);
          ++count;
        }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
  };
  m.ssim_full = masked_mean([](int, int) { return true; }).value_or(0.0);
  if (truth_dynamic) {
    MaskU8 stat(truth_dynamic->width(), truth_dynamic->height(), 1);
    for (int y = 0; y < stat.height(); ++y)
      for (int x = 0; x < stat.width(); ++x) stat.at(x, y) = truth_dynamic->at(x, y) ? 0 : 1;
    auto try_psnr = [&](const MaskU8& sel) -> std::optional<double> {
      try {
        return psnr(rendered, truth, &sel, coverage);
      } catch (const Error&) {
        return std::nullopt;
      }
    };
    m.psnr_dynamic = try_psnr(*truth_dynamic);
    m.psnr_static = try_psnr(stat);
    m.ssim_dynamic = masked_mean([&](int x, int y) { return truth_dynamic->at(x, y) != 0; });
    m.ssim_static = masked_mean([&](int x, int y) { return truth_dynamic->at(x, y) == 0; });
  }
  return m;
}

MetricReport aggregate(const std::vector<FrameMetrics>& frames) {
  if (frames.empty()) throw Error(ErrorKind::kInvalidArgument, "aggregate: no frames");
  MetricReport report;
  report.frames = frames;
  std::vector<std::string> order;
  std::map<std::string, std::map<std::string, std::pair<double, std::size_t>>> sums;
  std::map<std::string, std::size_t> counts;
  for (const auto& f : frames) {
    if (!counts.contains(f.scene)) order.push_back(f.scene);
    ++counts[f.scene];
    auto& s = sums[f.scene];
    auto add = [&](const char* name, std::optional<double> v) {
      if (!v) return;
      s[name].first += *v;
      ++s[name].second;
    };
    add("psnr", f.psnr_full);
    add("ssim", f.ssim_full);
    add("psnr_dynamic", f.psnr_dynamic);
    add("ssim_dynamic", f.ssim_dynamic);
    add("psnr_static", f.psnr_static);
    add("ssim_static", f.ssim_static);
  }
  std::map<std::string, std::pair<double, std::size_t>> across;
  for (const auto& name : order) {
    SceneSummary summary{name, counts[name], {}};
    for (const auto& [metric, acc] : sums[name]) {
      summary.means[metric] = acc.first / static_cast<double>(acc.second);
      across[metric].first += summary.means[metric];
      ++across[metric].second;
    }
    report.scenes.push_back(std::move(summary));
  }
  for (const auto& [metric, acc] : across)
    report.overall[metric] = acc.first / static_cast<double>(acc.second);
  return report;
}

}  // namespace stview
