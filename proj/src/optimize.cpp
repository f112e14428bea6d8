#include "mehaz/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "mehaz/error.hpp"
#include "mehaz/rng.hpp"

namespace mehaz {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Run {
  Vec x;
  double value = kInf;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

class SafeObjective {
 public:
  explicit SafeObjective(const std::function<double(const Vec&)>& f) : f_(f) {}
  double operator()(const Vec& x) {
    ++count;
    try {
      const double v = f_(x);
      return std::isfinite(v) ? v : kInf;
    } catch (const std::exception&) {
      return kInf;
    }
  }
  int count = 0;

 private:
  const std::function<double(const Vec&)>& f_;
};

Run nelder_mead(SafeObjective& f, const Box& box, const Vec& start, const MinimizeOptions& opt) {
  const auto d = box.dim();
  const int before = f.count;
  std::vector<Vec> pts(static_cast<std::size_t>(d + 1));
  std::vector<double> vals(static_cast<std::size_t>(d + 1));
  pts[0] = box.clamp(start);
  for (Eigen::Index k = 0; k < d; ++k) {
    Vec p = pts[0];
    const double step = 0.05 * (box.hi[k] - box.lo[k]);
    p[k] = p[k] + step <= box.hi[k] ? p[k] + step : p[k] - step;
    pts[static_cast<std::size_t>(k + 1)] = box.clamp(p);
  }
  for (std::size_t k = 0; k < pts.size(); ++k) vals[k] = f(pts[k]);

  std::vector<std::size_t> order(pts.size());
  Run run;
  for (run.iterations = 0; run.iterations < opt.max_iterations; ++run.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];

    double diameter = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) diameter = std::max(diameter, (pts[k] - pts[best]).norm());
    const double spread = vals[worst] - vals[best];
    if (diameter < opt.x_tol && (spread < opt.f_tol || (std::isinf(vals[worst]) && std::isinf(vals[best])))) {
      run.converged = std::isfinite(vals[best]);
      break;
    }

    Vec centroid = Vec::Zero(d);
    for (std::size_t k = 0; k < pts.size(); ++k)
      if (k != worst) centroid += pts[k];
    centroid /= static_cast<double>(d);

    const Vec xr = box.clamp(centroid + (centroid - pts[worst]));
    const double fr = f(xr);
    if (fr < vals[best]) {
      const Vec xe = box.clamp(centroid + 2.0 * (centroid - pts[worst]));
      const double fe = f(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Vec xc = outside ? box.clamp(centroid + 0.5 * (xr - centroid)) : box.clamp(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = f(xc);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (k == best) continue;
      pts[k] = box.clamp(pts[best] + 0.5 * (pts[k] - pts[best]));
      vals[k] = f(pts[k]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  run.x = pts[best];
  run.value = vals[best];
  run.evaluations = f.count - before;
  return run;
}

std::vector<Vec> latin_hypercube(const Box& box, int count, std::uint64_t seed) {
  Stream rng(seed, 0x4c4853ULL);
  const auto d = box.dim();
  std::vector<Vec> out(static_cast<std::size_t>(count), Vec(d));
  std::vector<int> perm(static_cast<std::size_t>(count));
  for (Eigen::Index k = 0; k < d; ++k) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = count - 1; i > 0; --i) {
      const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    for (int i = 0; i < count; ++i) {
      const double cell = (perm[static_cast<std::size_t>(i)] + rng.uniform()) / count;
      out[static_cast<std::size_t>(i)][k] = box.lo[k] + cell * (box.hi[k] - box.lo[k]);
    }
  }
  return out;
}

}  // namespace

bool Box::contains(const Vec& x) const {
  return x.size() == lo.size() && (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
}

void Box::validate() const {
  if (lo.size() != hi.size()) throw DomainError("box: lo and hi have different lengths");
  for (Eigen::Index k = 0; k < lo.size(); ++k)
    if (!(lo[k] <= hi[k]) || !std::isfinite(lo[k]) || !std::isfinite(hi[k])) {
      std::ostringstream msg;
      msg << "box: coordinate " << k << " needs finite lo <= hi";
      throw DomainError(msg.str());
    }
}

MinimizeResult minimize(const std::function<double(const Vec&)>& f, const Box& box, const MinimizeOptions& opt) {
  box.validate();
  if (opt.starts < 0) throw DomainError("minimize: starts must be non-negative");
  std::vector<Vec> starts{box.center()};
  if (box.dim() > 0)
    for (auto& p : latin_hypercube(box, opt.starts, opt.seed)) starts.push_back(std::move(p));

  SafeObjective obj(f);
  MinimizeResult out;
  out.value = kInf;
  if (box.dim() == 0) {
    out.x = Vec(0);
    out.value = obj(out.x);
    out.evaluations = 1;
    out.restarts_used = 1;
    out.converged = std::isfinite(out.value);
    if (!out.converged) throw NumericalError("minimize: criterion is not finite");
    return out;
  }
  for (const auto& s : starts) {
    const Run r = nelder_mead(obj, box, s, opt);
    ++out.restarts_used;
    out.iterations += r.iterations;
    if (r.value < out.value) {
      out.x = r.x;
      out.value = r.value;
      out.converged = r.converged;
    }
  }
  out.evaluations = obj.count;
  if (!std::isfinite(out.value)) throw NumericalError("minimize: the criterion was not finite at any start");
  return out;
}

}  // namespace mehaz
