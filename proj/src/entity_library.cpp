#include "dire/entity_library.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dire {

std::vector<double> Library::row_norms() const {
  std::vector<double> out(rows());
  for (std::size_t i = 0; i < rows(); ++i) out[i] = norm(entities_.row(i));
  return out;
}

Library init_library(const Vec& first) {
  if (first.empty()) throw std::invalid_argument("init_library: empty exposure vector");
  return Library(Mat(1, first.dim(), first.values()), 1);
}

Vec similarity_profile(const Library& lib, const Vec& u) {
  if (lib.step() == 0) throw std::invalid_argument("similarity_profile: empty library");
  if (u.dim() != lib.cols()) {
    throw DimensionError("similarity_profile: library has " + std::to_string(lib.cols()) +
                         " columns, exposure has dim " + std::to_string(u.dim()));
  }
  return matvec(lib.entities(), u);
}

double old_probability(const Vec& s, const GateParams& gate) {
  if (s.empty()) throw std::invalid_argument("old_probability: empty similarity profile");
  return sigmoid(gate.w * s[argmax_first(s)] + gate.b);
}

Vec insertion_distribution(const Vec& s, double p_old) {
  // NaN passes through so that a diverged model surfaces as a non-finite loss.
  if (p_old < 0.0 || p_old > 1.0) {
    throw std::invalid_argument("insertion_distribution: p_old " + std::to_string(p_old) +
                                " outside [0,1]");
  }
  Vec a = softmax(s);
  Vec z(s.dim() + 1);
  for (std::size_t j = 0; j < s.dim(); ++j) z[j] = p_old * a[j];
  z[s.dim()] = 1.0 - p_old;
  return z;
}

Library update(const Library& lib, const Vec& u, const Vec& z) {
  if (z.dim() != lib.rows() + 1) {
    throw DimensionError("update: z has dim " + std::to_string(z.dim()) + ", library has " +
                         std::to_string(lib.rows()) + " rows");
  }
  if (u.dim() != lib.cols()) {
    throw DimensionError("update: exposure dim " + std::to_string(u.dim()) + " vs library cols " +
                         std::to_string(lib.cols()));
  }
  double total = 0.0;
  for (double v : z) total += v;
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("update: z sums to " + std::to_string(total));
  }
  Mat next = lib.entities();
  next.append_zero_row();
  add_outer(next, z, u);
  return Library(std::move(next), lib.step() + 1);
}

Library build(std::span<const Vec> exposures, const GateParams& gate, BuildTrace* trace,
              const BuildOptions& options) {
  if (exposures.empty()) throw std::invalid_argument("build: no exposures");
  const std::size_t dim = exposures.front().dim();
  for (std::size_t i = 1; i < exposures.size(); ++i) {
    if (exposures[i].dim() != dim) {
      throw DimensionError("build: exposure " + std::to_string(i) + " has dim " +
                           std::to_string(exposures[i].dim()) + ", expected " +
                           std::to_string(dim));
    }
  }
  if (trace) {
    *trace = BuildTrace{};
    trace->exposures.assign(exposures.begin(), exposures.end());
  }

  Library lib = init_library(exposures.front());
  if (trace) trace->states.push_back(lib);
  for (std::size_t i = 1; i < exposures.size(); ++i) {
    const Vec& u = exposures[i];
    InsertionStep step;
    step.similarity = similarity_profile(lib, u);
    step.max_index = argmax_first(step.similarity);
    step.s_max = step.similarity[step.max_index];
    step.p_old = options.fixed_p_old ? *options.fixed_p_old : old_probability(step.similarity, gate);
    step.z = insertion_distribution(step.similarity, step.p_old);
    lib = update(lib, u, step.z);
    if (trace) {
      step.attention = softmax(step.similarity);
      trace->steps.push_back(std::move(step));
      trace->states.push_back(lib);
    }
  }
  return lib;
}

Retrieval attend_and_read(const Mat& keys, const Mat& values, const Vec& q) {
  if (keys.rows() == 0) throw std::invalid_argument("attend_and_read: empty memory");
  if (keys.rows() != values.rows()) {
    throw DimensionError("attend_and_read: keys " + shape_string(keys) + " vs values " +
                         shape_string(values));
  }
  Retrieval out;
  out.attention = softmax(matvec(keys, q));
  out.read = matvec_transposed(values, out.attention);
  return out;
}

Retrieval retrieve(const Library& lib, const Vec& q) {
  if (q.dim() != lib.cols()) {
    throw DimensionError("retrieve: query dim " + std::to_string(q.dim()) + " vs library cols " +
                         std::to_string(lib.cols()));
  }
  return attend_and_read(lib.entities(), lib.entities(), q);
}

RetrievalGradient attend_and_read_backward(const Mat& keys, const Mat& values, const Vec& q,
                                           const Retrieval& forward, const Vec& d_read) {
  RetrievalGradient grad;
  grad.values = outer(forward.attention, d_read);
  const Vec d_attention = matvec(values, d_read);
  const Vec d_logits = softmax_backward(forward.attention, d_attention);
  grad.keys = outer(d_logits, q);
  grad.query = matvec_transposed(keys, d_logits);
  return grad;
}

BuildGradient build_backward(const BuildTrace& trace, const GateParams& gate, const Mat& d_library,
                             std::span<const Vec> extra_dz, const BuildOptions& options) {
  const std::size_t n = trace.exposures.size();
  if (n == 0 || trace.states.size() != n || trace.steps.size() + 1 != n) {
    throw std::invalid_argument("build_backward: incomplete build trace");
  }
  if (d_library.rows() != n || d_library.cols() != trace.exposures.front().dim()) {
    throw DimensionError("build_backward: gradient " + shape_string(d_library) +
                         " does not match library " + shape_string(trace.states.back().entities()));
  }
  if (!extra_dz.empty() && extra_dz.size() != trace.steps.size()) {
    throw DimensionError("build_backward: extra_dz has " + std::to_string(extra_dz.size()) +
                         " entries for " + std::to_string(trace.steps.size()) + " insertions");
  }

  BuildGradient grad;
  grad.exposures.assign(n, Vec(d_library.cols()));
  Mat d_current = d_library;

  for (std::size_t i = n - 1; i >= 1; --i) {
    const InsertionStep& step = trace.steps[i - 1];
    const Mat& prev = trace.states[i - 1].entities();
    const Vec& u = trace.exposures[i];
    const std::size_t old_rows = prev.rows();
    Vec& du = grad.exposures[i];

    Vec dz(old_rows + 1);
    for (std::size_t j = 0; j <= old_rows; ++j) {
      dz[j] = dot(d_current.row(j), u.span());
      axpy(step.z[j], d_current.row(j), du.span());
    }
    if (!extra_dz.empty()) dz += extra_dz[i - 1];

    double dp = -dz[old_rows];
    Vec d_attention(old_rows);
    for (std::size_t j = 0; j < old_rows; ++j) {
      dp += dz[j] * step.attention[j];
      d_attention[j] = step.p_old * dz[j];
    }
    Vec ds = softmax_backward(step.attention, d_attention);
    if (!options.fixed_p_old) {
      const double d_pre = dp * step.p_old * (1.0 - step.p_old);
      grad.w += d_pre * step.s_max;
      grad.b += d_pre;
      ds[step.max_index] += d_pre * gate.w;
    }

    // Drop the blank row opened at this step, then route ds through s = E·u.
    Mat d_prev(old_rows, prev.cols(),
               std::vector<double>(d_current.flat().begin(),
                                   d_current.flat().begin() + old_rows * prev.cols()));
    add_outer(d_prev, ds, u);
    du += matvec_transposed(prev, ds);
    d_current = std::move(d_prev);
  }
  axpy(1.0, d_current.row(0), grad.exposures[0].span());
  return grad;
}

Mat replay_insertions(const BuildTrace& trace, std::span<const Vec> exposures) {
  if (exposures.size() != trace.exposures.size()) {
    throw DimensionError("replay_insertions: " + std::to_string(exposures.size()) +
                         " exposures for a trace of " + std::to_string(trace.exposures.size()));
  }
  const std::size_t n = exposures.size();
  const std::size_t cols = exposures.front().dim();
  Mat out(n, cols);
  axpy(1.0, exposures[0].span(), out.row(0));
  for (std::size_t i = 1; i < n; ++i) {
    const Vec& z = trace.steps[i - 1].z;
    for (std::size_t j = 0; j <= i; ++j) axpy(z[j], exposures[i].span(), out.row(j));
  }
  return out;
}

ReplayGradient replay_insertions_backward(const BuildTrace& trace, std::span<const Vec> exposures,
                                          const Mat& d_library) {
  const std::size_t n = exposures.size();
  ReplayGradient grad;
  grad.exposures.assign(n, Vec(d_library.cols()));
  axpy(1.0, d_library.row(0), grad.exposures[0].span());
  for (std::size_t i = 1; i < n; ++i) {
    const Vec& z = trace.steps[i - 1].z;
    Vec dz(i + 1);
    for (std::size_t j = 0; j <= i; ++j) {
      dz[j] = dot(d_library.row(j), exposures[i].span());
      axpy(z[j], d_library.row(j), grad.exposures[i].span());
    }
    grad.dz.push_back(std::move(dz));
  }
  return grad;
}

nlohmann::json library_to_json(const Library& lib, const BuildTrace* trace) {
  nlohmann::json out;
  out["step"] = lib.step();
  out["rows"] = lib.rows();
  out["cols"] = lib.cols();
  auto flat = lib.entities().flat();
  out["E"] = std::vector<double>(flat.begin(), flat.end());
  out["row_norms"] = lib.row_norms();
  if (trace) {
    auto log = nlohmann::json::array();
    for (std::size_t k = 0; k < trace->steps.size(); ++k) {
      const auto& s = trace->steps[k];
      log.push_back({{"exposure", k + 2},
                     {"s_max", s.s_max},
                     {"p_old", s.p_old},
                     {"z", s.z.values()}});
    }
    out["steps"] = std::move(log);
  }
  return out;
}

}  // namespace dire
