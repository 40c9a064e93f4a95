#include "mpview/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mpview/parallel.hpp"

namespace mpview {

std::vector<double> stratified_sample(double t_near, double t_far, int count,
                                      Rng& rng) {
  std::vector<double> samples(static_cast<size_t>(count));
  const double bin = (t_far - t_near) / count;
  for (int i = 0; i < count; ++i)
    samples[static_cast<size_t>(i)] = t_near + (i + rng.uniform()) * bin;
  return samples;
}

namespace {

// Index tuples enumerate candidate assignments; alphas are visited largest
// value first so that among ties the front-most-mass solution is kept.
struct TupleCursor {
  std::vector<int> idx;
  int radix;
  bool done = false;

  explicit TupleCursor(int size, int radix_) : idx(static_cast<size_t>(size), 0), radix(radix_) {}
  void advance() {
    for (int i = static_cast<int>(idx.size()) - 1; i >= 0; --i) {
      if (++idx[static_cast<size_t>(i)] < radix) return;
      idx[static_cast<size_t>(i)] = 0;
    }
    done = true;
  }
};

struct ChannelBest {
  double residual = 0.0;
  int count = 0;
  std::vector<int> idx;
};

// Best color assignment for one channel under fixed compositing weights.
ChannelBest best_channel(const std::vector<double>& weights, double gt,
                         const std::vector<double>& grid, double l0_weight,
                         SparseMode mode) {
  const int m = static_cast<int>(weights.size());
  const int radix = static_cast<int>(grid.size());
  ChannelBest best;
  bool have = false;
  for (TupleCursor cur(m, radix); !cur.done; cur.advance()) {
    double rendered = 0.0;
    int count = 0;
    for (int i = 0; i < m; ++i) {
      const double c = grid[static_cast<size_t>(cur.idx[static_cast<size_t>(i)])];
      rendered += weights[static_cast<size_t>(i)] * c;
      if (c != 0.0) ++count;
    }
    const double residual = (rendered - gt) * (rendered - gt);
    bool better;
    if (!have) {
      better = true;
    } else if (mode == SparseMode::EquationConstrained) {
      better = residual < best.residual ||
               (residual == best.residual && count < best.count);
    } else {
      const double obj = residual + l0_weight * count;
      const double best_obj = best.residual + l0_weight * best.count;
      better = obj < best_obj;
    }
    if (better) {
      best.residual = residual;
      best.count = count;
      best.idx = cur.idx;
      have = true;
    }
  }
  return best;
}

struct AlphaCandidate {
  double residual = 0.0;
  int l0 = 0;
  std::vector<int> alpha_idx;           // descending-value indices
  std::vector<std::vector<int>> color_idx;  // per channel
  bool valid = false;
};

bool candidate_better(const AlphaCandidate& a, const AlphaCandidate& b,
                      double l0_weight, SparseMode mode) {
  if (!b.valid) return true;
  if (mode == SparseMode::EquationConstrained) {
    if (a.residual != b.residual) return a.residual < b.residual;
    if (a.l0 != b.l0) return a.l0 < b.l0;
  } else {
    const double oa = a.residual + l0_weight * a.l0;
    const double ob = b.residual + l0_weight * b.l0;
    if (oa != ob) return oa < ob;
  }
  return a.alpha_idx < b.alpha_idx;  // front-most mass first
}

}  // namespace

SparseSolution sparse_solution_oracle(const SparseInstance& inst, SparseMode mode,
                                      int workers) {
  const int m = inst.sample_count;
  const int na = static_cast<int>(inst.alpha_grid.size());
  const int nc = static_cast<int>(inst.color_grid.size());
  const double alpha_work = std::pow(static_cast<double>(na), m);
  const double total_work = alpha_work * 3.0 * std::pow(static_cast<double>(nc), m);
  if (total_work > 1e8)
    throw BudgetExceeded("enumeration would cost " + std::to_string(total_work) +
                         " evaluations (budget 1e8)");

  // Alphas sorted descending so lexicographically-earliest index tuples put
  // opacity on the earliest samples.
  std::vector<double> alpha_desc = inst.alpha_grid;
  std::sort(alpha_desc.begin(), alpha_desc.end(), std::greater<>());
  // Colors ascending; ties prefer zeros.
  std::vector<double> color_asc = inst.color_grid;
  std::sort(color_asc.begin(), color_asc.end());

  const long n_alpha_tuples = static_cast<long>(alpha_work);
  std::vector<AlphaCandidate> per_tuple(static_cast<size_t>(n_alpha_tuples));

  parallel_for(n_alpha_tuples, workers, [&](long flat) {
    std::vector<int> idx(static_cast<size_t>(m));
    long rest = flat;
    for (int i = m - 1; i >= 0; --i) {
      idx[static_cast<size_t>(i)] = static_cast<int>(rest % na);
      rest /= na;
    }
    std::vector<double> alphas(static_cast<size_t>(m));
    std::vector<double> weights(static_cast<size_t>(m));
    double transmittance = 1.0;
    int alpha_count = 0;
    for (int i = 0; i < m; ++i) {
      alphas[static_cast<size_t>(i)] = alpha_desc[static_cast<size_t>(idx[static_cast<size_t>(i)])];
      weights[static_cast<size_t>(i)] = alphas[static_cast<size_t>(i)] * transmittance;
      transmittance *= 1.0 - alphas[static_cast<size_t>(i)];
      if (alphas[static_cast<size_t>(i)] != 0.0) ++alpha_count;
    }

    AlphaCandidate cand;
    cand.alpha_idx = idx;
    cand.residual = 0.0;
    cand.l0 = alpha_count;
    for (int ch = 0; ch < 3; ++ch) {
      ChannelBest b =
          best_channel(weights, inst.c_gt[ch], color_asc, inst.l0_weight, mode);
      cand.residual += b.residual;
      cand.l0 += b.count;
      cand.color_idx.push_back(std::move(b.idx));
    }
    cand.valid = true;
    per_tuple[static_cast<size_t>(flat)] = std::move(cand);
  });

  AlphaCandidate best;
  for (const auto& cand : per_tuple)
    if (candidate_better(cand, best, inst.l0_weight, mode)) best = cand;

  SparseSolution sol;
  sol.alphas.resize(static_cast<size_t>(m));
  sol.colors.assign(static_cast<size_t>(m), Vec3::Zero());
  for (int i = 0; i < m; ++i) {
    sol.alphas[static_cast<size_t>(i)] =
        alpha_desc[static_cast<size_t>(best.alpha_idx[static_cast<size_t>(i)])];
    for (int ch = 0; ch < 3; ++ch)
      sol.colors[static_cast<size_t>(i)][ch] =
          color_asc[static_cast<size_t>(best.color_idx[static_cast<size_t>(ch)][static_cast<size_t>(i)])];
  }
  sol.residual_sq = best.residual;
  sol.l0_count = best.l0;
  sol.objective = best.residual + inst.l0_weight * best.l0;
  return sol;
}

SparseSolution sparse_closed_form(const SparseInstance& inst) {
  SparseSolution sol;
  sol.alphas.assign(static_cast<size_t>(inst.sample_count), 0.0);
  sol.colors.assign(static_cast<size_t>(inst.sample_count), Vec3::Zero());
  sol.alphas[0] = 1.0;
  sol.colors[0] = inst.c_gt;
  const Vec3 rendered = sol.colors[0];  // w_0 = 1, all later weights 0
  sol.residual_sq = (rendered - inst.c_gt).squaredNorm();
  sol.l0_count = 1;
  for (int ch = 0; ch < 3; ++ch)
    if (inst.c_gt[ch] != 0.0) ++sol.l0_count;
  if (inst.c_gt.cwiseAbs().maxCoeff() == 0.0) {
    // Black needs no mass at all.
    sol.alphas[0] = 0.0;
    sol.l0_count = 0;
  }
  sol.objective = sol.residual_sq + inst.l0_weight * sol.l0_count;
  return sol;
}

OverlapReport cross_view_overlap(const std::vector<CameraRig>& cameras,
                                 SamplingMode mode, const PlaneStack& planes,
                                 int samples_per_ray, double epsilon, int trials,
                                 uint64_t seed, int workers) {
  OverlapReport report;
  report.mode = mode;
  report.epsilon = epsilon;
  report.samples_per_ray = samples_per_ray;
  report.trials = trials;

  // Log-spaced distance bins over six decades below the depth range.
  const double range = planes.far - planes.near;
  constexpr int kBins = 32;
  for (int i = 0; i <= kBins; ++i)
    report.histogram_edges.push_back(range * std::pow(10.0, -6.0 + 6.0 * i / kBins));

  Rng base(seed);
  const int n = static_cast<int>(cameras.size());
  int pair_index = 0;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b, ++pair_index) {
      PairOverlap pair;
      pair.view_a = a;
      pair.view_b = b;
      pair.histogram.assign(static_cast<size_t>(kBins) + 2, 0);

      struct TrialResult {
        uint64_t tested = 0;
        uint64_t matched = 0;
        double min_distance = std::numeric_limits<double>::infinity();
        std::vector<uint64_t> histogram;
      };
      std::vector<TrialResult> results(static_cast<size_t>(trials));

      parallel_for(trials, workers, [&](long k) {
        Rng rng = base.fork(static_cast<uint64_t>(pair_index) * 1000003ULL +
                            static_cast<uint64_t>(k));
        TrialResult& res = results[static_cast<size_t>(k)];
        res.histogram.assign(static_cast<size_t>(kBins) + 2, 0);

        const Vec2 pa(rng.uniform(0.0, cameras[static_cast<size_t>(a)].intr.width),
                      rng.uniform(0.0, cameras[static_cast<size_t>(a)].intr.height));
        const Vec2 pb(rng.uniform(0.0, cameras[static_cast<size_t>(b)].intr.width),
                      rng.uniform(0.0, cameras[static_cast<size_t>(b)].intr.height));

        if (mode == SamplingMode::Stratified) {
          const Ray ray_a = pixel_ray(cameras[static_cast<size_t>(a)].intr,
                                      cameras[static_cast<size_t>(a)].pose, pa);
          const Ray ray_b = pixel_ray(cameras[static_cast<size_t>(b)].intr,
                                      cameras[static_cast<size_t>(b)].pose, pb);
          const auto ta = stratified_sample(planes.near, planes.far, samples_per_ray, rng);
          const auto tb = stratified_sample(planes.near, planes.far, samples_per_ray, rng);
          std::vector<Vec3> xs_b;
          xs_b.reserve(tb.size());
          for (double t : tb) xs_b.push_back(ray_b.origin + t * ray_b.dir);
          for (double t : ta) {
            const Vec3 x = ray_a.origin + t * ray_a.dir;
            double nearest = std::numeric_limits<double>::infinity();
            for (const Vec3& y : xs_b) nearest = std::min(nearest, (x - y).norm());
            // A sample counts as matched when some sample of the other view
            // lands within epsilon of it.
            res.tested += 1;
            if (nearest < epsilon) res.matched += 1;
            size_t bin = 0;
            while (bin < static_cast<size_t>(kBins) + 1 &&
                   nearest >= report.histogram_edges[bin])
              ++bin;
            res.histogram[bin] += 1;
            // Closest achievable approach, for calibration against what the
            // random draws actually achieved.
            const auto cp =
                closest_point_parameter(x, ray_b.origin, ray_b.dir, planes.near, planes.far);
            res.min_distance = std::min(res.min_distance, cp.distance);
          }
        } else {
          // Shared-plane sampling: both rays sample on view a's plane stack;
          // a sample "matches" when its reference-frame depth sits exactly on
          // a plane, which holds by construction.
          for (int side = 0; side < 2; ++side) {
            const auto& target = side == 0 ? cameras[static_cast<size_t>(a)]
                                           : cameras[static_cast<size_t>(b)];
            const Vec2& px = side == 0 ? pa : pb;
            const auto hits = ray_plane_intersections(
                px, target.intr, target.pose, cameras[static_cast<size_t>(a)].intr,
                cameras[static_cast<size_t>(a)].pose, planes);
            for (const auto& hit : hits) {
              res.tested += 1;
              for (double z : planes.depths)
                if (hit.plane_depth == z) {
                  res.matched += 1;
                  break;
                }
            }
          }
        }
      });

      pair.min_distance = std::numeric_limits<double>::infinity();
      for (const auto& res : results) {
        pair.tested += res.tested;
        pair.matched += res.matched;
        pair.min_distance = std::min(pair.min_distance, res.min_distance);
        for (size_t i = 0; i < pair.histogram.size(); ++i)
          pair.histogram[i] += res.histogram[i];
      }
      if (mode != SamplingMode::Stratified) pair.min_distance = 0.0;
      pair.fraction = pair.tested > 0
                          ? static_cast<double>(pair.matched) / static_cast<double>(pair.tested)
                          : 0.0;
      report.pairs.push_back(std::move(pair));
    }
  }
  return report;
}

std::string format_overlap_report(const OverlapReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line),
                "mode=%s samples_per_ray=%d trials=%d epsilon=%.9g\n",
                report.mode == SamplingMode::Stratified ? "stratified" : "plane-constrained",
                report.samples_per_ray, report.trials, report.epsilon);
  out += line;
  out += "pair      tested        matched     fraction      min_distance\n";
  for (const auto& p : report.pairs) {
    std::snprintf(line, sizeof(line), "%d-%d  %12llu  %12llu  %.9f  %.9g\n",
                  p.view_a, p.view_b, static_cast<unsigned long long>(p.tested),
                  static_cast<unsigned long long>(p.matched), p.fraction,
                  p.min_distance);
    out += line;
  }
  return out;
}

std::string format_overlap_records(const OverlapReport& report) {
  std::string out = "mode\tview_a\tview_b\ttested\tmatched\tfraction\tmin_distance\tepsilon\n";
  char line[256];
  for (const auto& p : report.pairs) {
    std::snprintf(line, sizeof(line), "%s\t%d\t%d\t%llu\t%llu\t%.12g\t%.12g\t%.12g\n",
                  report.mode == SamplingMode::Stratified ? "stratified" : "plane-constrained",
                  p.view_a, p.view_b, static_cast<unsigned long long>(p.tested),
                  static_cast<unsigned long long>(p.matched), p.fraction,
                  p.min_distance, report.epsilon);
    out += line;
  }
  return out;
}

}  // namespace mpview
