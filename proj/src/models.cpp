#include "dire/models.hpp"

#include <cmath>
#include <sstream>

#include "dire/dropout.hpp"

namespace dire {

namespace {

const char* kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::random: return "random";
    case ModelKind::ff: return "ff";
    case ModelKind::rnn: return "rnn";
    case ModelKind::dire: return "dire";
    case ModelKind::memn: return "memn";
  }
  return "?";
}

Mat uniform_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Mat m(rows, cols);
  for (auto& x : m.flat()) x = dist(rng);
  return m;
}

Mat scalar_block(double x) { return Mat(1, 1, std::vector<double>{x}); }

Vec bias(const Mat& b) { return b.row_vec(0); }

void add_bias_grad(Mat& grad, const Vec& d) { axpy(1.0, d.span(), grad.flat()); }

// x ↦ Mᵀx + b
Vec affine(const Mat& m, const Mat& b, const Vec& x) {
  Vec out = matvec_transposed(m, x);
  out += bias(b);
  return out;
}

Vec sigmoid_backward(const Vec& y, const Vec& dy) {
  Vec out(y.dim());
  for (std::size_t i = 0; i < y.dim(); ++i) out[i] = dy[i] * y[i] * (1.0 - y[i]);
  return out;
}

Vec slice(const Vec& v, std::size_t offset, std::size_t len) {
  return Vec(std::vector<double>(v.begin() + offset, v.begin() + offset + len));
}

Mat rows_to_mat(const std::vector<Vec>& rows) {
  Mat m(rows.size(), rows.front().dim());
  for (std::size_t i = 0; i < rows.size(); ++i) axpy(1.0, rows[i].span(), m.row(i));
  return m;
}

// Fills the shared scoring part of a trace.
void score_into(ForwardTrace& trace, const Vec& comparison, const Datapoint& dp,
                const Mat& image_map) {
  trace.comparison = comparison;
  trace.mapped_candidates.clear();
  trace.scores = Vec(dp.candidates.size());
  for (std::size_t j = 0; j < dp.candidates.size(); ++j) {
    trace.mapped_candidates.push_back(matvec_transposed(image_map, dp.candidates[j]));
    trace.scores[j] = dot(comparison, trace.mapped_candidates.back());
  }
  trace.distribution = softmax(trace.scores);
  trace.gold = dp.gold;
  trace.prediction = argmax_first(trace.distribution);
  trace.loss = log_sum_exp(trace.scores) - trace.scores[dp.gold];
}

// Cross-entropy gradient through the scorer. Accumulates into the image map
// gradient and returns the gradient on the comparison vector.
Vec score_backward(const ForwardTrace& trace, const Datapoint& dp, Mat& d_image_map) {
  Vec d_scores = trace.distribution;
  d_scores[trace.gold] -= 1.0;
  Vec d_comparison(trace.comparison.dim());
  for (std::size_t j = 0; j < dp.candidates.size(); ++j) {
    axpy(d_scores[j], trace.mapped_candidates[j], d_comparison);
    add_outer(d_image_map, dp.candidates[j], trace.comparison, d_scores[j]);
  }
  return d_comparison;
}

void embed_exposure_backward(const Exposure& e, const Vec& du, Mat& d_image_map,
                             Mat& d_attribute_map) {
  add_outer(d_image_map, e.image, du);
  add_outer(d_attribute_map, e.attribute, du);
}

void embed_query_backward(const Query& q, const Vec& dq, Mat& d_noun_map, Mat& d_attribute_map) {
  add_outer(d_noun_map, q.noun, dq);
  add_outer(d_attribute_map, q.attributes[0], dq);
  add_outer(d_attribute_map, q.attributes[1], dq);
}

ForwardTrace new_trace(const Model& model, const ForwardOptions& opt) {
  ForwardTrace t;
  t.spec = model.spec;
  t.params_fingerprint = model.params.fingerprint();
  t.options = opt;
  return t;
}

Rng dropout_rng(const ForwardOptions& opt) { return make_stream(opt.dropout_seed, streams::dropout); }

void require_kind(const Model& model, ModelKind kind) {
  if (model.spec.kind != kind) {
    throw std::invalid_argument(std::string("expected a ") + kind_name(kind) + " model, got " +
                                model.spec.name());
  }
}

void require_fresh(const Model& model, const ForwardTrace& trace) {
  if (!(trace.spec == model.spec) || trace.params_fingerprint != model.params.fingerprint()) {
    throw std::invalid_argument("backward: stale trace (parameters changed since forward)");
  }
}

}  // namespace

std::string ModelSpec::name() const {
  std::string out = kind_name(kind);
  if (kind == ModelKind::dire || kind == ModelKind::memn) {
    out += "-" + std::to_string(matrix_sets) + "m";
  }
  if (kind == ModelKind::memn) out += "-" + std::to_string(hops) + "h";
  if (kind == ModelKind::dire && probe == Probe::query) out += "-qprobe";
  return out;
}

ModelSpec parse_model_spec(std::string_view name) {
  auto fail = [&] {
    return std::invalid_argument("unknown model '" + std::string(name) +
                                 "' (expected random, ff, rnn, dire-{1m,2m}, "
                                 "memn-{1m,2m}-{1h,2h,3h})");
  };
  ModelSpec spec;
  if (name == "random") { spec.kind = ModelKind::random; return spec; }
  if (name == "ff") { spec.kind = ModelKind::ff; return spec; }
  if (name == "rnn") { spec.kind = ModelKind::rnn; return spec; }
  std::string s(name);
  if (s.ends_with("-qprobe") && s.starts_with("dire-")) {
    spec.probe = Probe::query;
    s.resize(s.size() - 7);
  }
  if (s == "dire-1m" || s == "dire-2m") {
    spec.kind = ModelKind::dire;
    spec.matrix_sets = s[5] - '0';
    return spec;
  }
  if (s.size() == 10 && s.starts_with("memn-") && s[6] == 'm' && s[7] == '-' && s[9] == 'h') {
    const int sets = s[5] - '0';
    const int hops = s[8] - '0';
    if ((sets == 1 || sets == 2) && hops >= 1 && hops <= 3) {
      spec.kind = ModelKind::memn;
      spec.matrix_sets = sets;
      spec.hops = hops;
      return spec;
    }
  }
  throw fail();
}

std::vector<ModelSpec> all_trainable_specs() {
  std::vector<ModelSpec> out;
  for (const char* n : {"ff", "rnn", "dire-1m", "dire-2m", "memn-1m-1h", "memn-1m-2h",
                        "memn-1m-3h", "memn-2m-1h", "memn-2m-2h", "memn-2m-3h"}) {
    out.push_back(parse_model_spec(n));
  }
  return out;
}

Model init_model(const ModelSpec& spec, const ModelDims& dims, std::uint64_t seed) {
  if (spec.kind != ModelKind::random &&
      (dims.image == 0 || dims.attribute == 0 || dims.noun == 0 || dims.multimodal == 0)) {
    throw std::invalid_argument("init_model: dimensions must be positive");
  }
  if (spec.kind == ModelKind::memn && (spec.hops < 1 || spec.hops > 3)) {
    throw std::invalid_argument("init_model: hops must be 1, 2 or 3");
  }
  if (spec.matrix_sets != 1 && spec.matrix_sets != 2) {
    throw std::invalid_argument("init_model: matrix_sets must be 1 or 2");
  }
  Rng rng = make_stream(seed, streams::init);
  Model model{spec, dims, {}};
  if (spec.kind == ModelKind::random) return model;

  const std::size_t m = dims.multimodal;
  const std::size_t h = dims.hidden;
  auto& p = model.params;
  p.add("V", uniform_matrix(dims.image, m, rng));
  p.add("A", uniform_matrix(dims.attribute, m, rng));
  p.add("C", uniform_matrix(dims.noun, m, rng));
  switch (spec.kind) {
    case ModelKind::dire:
      p.add("w", scalar_block(1.0));
      p.add("b", scalar_block(0.0));
      [[fallthrough]];
    case ModelKind::memn:
      if (spec.matrix_sets == 2) {
        p.add("V_out", uniform_matrix(dims.image, m, rng));
        p.add("A_out", uniform_matrix(dims.attribute, m, rng));
      }
      break;
    case ModelKind::ff:
      if (dims.exposures == 0 || h == 0) throw std::invalid_argument("init_model: ff needs sizes");
      p.add("W1", uniform_matrix((dims.exposures + 1) * m, h, rng));
      p.add("b1", Mat(1, h));
      p.add("W2", uniform_matrix(h, h, rng));
      p.add("b2", Mat(1, h));
      p.add("W3", uniform_matrix(h, m, rng));
      p.add("b3", Mat(1, m));
      break;
    case ModelKind::rnn:
      if (h == 0) throw std::invalid_argument("init_model: rnn needs a hidden size");
      p.add("Wu", uniform_matrix(m, h, rng));
      p.add("Wh", uniform_matrix(h, h, rng));
      p.add("bh", Mat(1, h));
      p.add("W2", uniform_matrix(h + m, h, rng));
      p.add("b2", Mat(1, h));
      p.add("W3", uniform_matrix(h, m, rng));
      p.add("b3", Mat(1, m));
      break;
    case ModelKind::random:
      break;
  }
  return model;
}

void check_datapoint(const ModelDims& dims, ModelKind kind, const Datapoint& dp) {
  auto fail = [](const std::string& msg) { throw DatapointError("malformed datapoint: " + msg); };
  if (dp.exposures.empty()) fail("exposures: empty");
  if (kind == ModelKind::ff && dp.exposures.size() != dims.exposures) {
    fail("exposures: " + std::to_string(dp.exposures.size()) + " given, ff model expects " +
         std::to_string(dims.exposures));
  }
  if (dp.candidates.size() < 2) fail("candidates: need at least 2");
  if (dp.gold >= dp.candidates.size()) {
    fail("gold: index " + std::to_string(dp.gold) + " with " +
         std::to_string(dp.candidates.size()) + " candidates");
  }
  if (kind == ModelKind::random) return;
  for (std::size_t i = 0; i < dp.exposures.size(); ++i) {
    if (dp.exposures[i].image.dim() != dims.image) {
      fail("exposures[" + std::to_string(i) + "].image: dim " +
           std::to_string(dp.exposures[i].image.dim()) + ", expected " +
           std::to_string(dims.image));
    }
    if (dp.exposures[i].attribute.dim() != dims.attribute) {
      fail("exposures[" + std::to_string(i) + "].attribute: dim " +
           std::to_string(dp.exposures[i].attribute.dim()) + ", expected " +
           std::to_string(dims.attribute));
    }
  }
  if (dp.query.noun.dim() != dims.noun) {
    fail("query.noun: dim " + std::to_string(dp.query.noun.dim()) + ", expected " +
         std::to_string(dims.noun));
  }
  for (std::size_t k = 0; k < 2; ++k) {
    if (dp.query.attributes[k].dim() != dims.attribute) {
      fail("query.attrs[" + std::to_string(k) + "]: dim " +
           std::to_string(dp.query.attributes[k].dim()) + ", expected " +
           std::to_string(dims.attribute));
    }
  }
  for (std::size_t j = 0; j < dp.candidates.size(); ++j) {
    if (dp.candidates[j].dim() != dims.image) {
      fail("candidates[" + std::to_string(j) + "]: dim " +
           std::to_string(dp.candidates[j].dim()) + ", expected " + std::to_string(dims.image));
    }
  }
}

Vec embed_exposure(const Vec& image, const Vec& attribute, const Mat& image_map,
                   const Mat& attribute_map) {
  Vec u = matvec_transposed(image_map, image);
  u += matvec_transposed(attribute_map, attribute);
  return u;
}

Vec embed_query(const Vec& noun, const Vec& a1, const Vec& a2, const Mat& noun_map,
                const Mat& attribute_map) {
  Vec q = matvec_transposed(noun_map, noun);
  q += matvec_transposed(attribute_map, a1);
  q += matvec_transposed(attribute_map, a2);
  return q;
}

Vec score_candidates(const Vec& probe, const std::vector<Vec>& candidates, const Mat& image_map) {
  if (candidates.empty()) throw std::invalid_argument("score_candidates: no candidates");
  Vec scores(candidates.size());
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    scores[j] = dot(probe, matvec_transposed(image_map, candidates[j]));
  }
  return softmax(scores);
}

// ---------------------------------------------------------------------------
// DIRE

ForwardTrace dire_forward(const Model& model, const Datapoint& dp, const ForwardOptions& opt) {
  require_kind(model, ModelKind::dire);
  check_datapoint(model.dims, model.spec.kind, dp);
  const auto& p = model.params;
  const bool two_sets = model.spec.matrix_sets == 2;
  const GateParams gate{p.scalar("w"), p.scalar("b")};

  ForwardTrace trace = new_trace(model, opt);
  DireCache c;
  Rng rng = dropout_rng(opt);
  for (const auto& e : dp.exposures) {
    auto d = apply_dropout(embed_exposure(e.image, e.attribute, p.get("V"), p.get("A")),
                           opt.dropout, rng, opt.training);
    if (two_sets) {
      c.exposures_out.push_back(
          hadamard(embed_exposure(e.image, e.attribute, p.get("V_out"), p.get("A_out")), d.mask));
    }
    c.exposures.push_back(std::move(d.output));
    c.masks.push_back(std::move(d.mask));
  }
  c.query = embed_query(dp.query.noun, dp.query.attributes[0], dp.query.attributes[1], p.get("C"),
                        p.get("A"));
  c.library = build(c.exposures, gate, &c.build, BuildOptions{opt.fixed_p_old});
  c.values = two_sets ? replay_insertions(c.build, c.exposures_out) : c.library.entities();
  c.retrieval = attend_and_read(c.library.entities(), c.values, c.query);

  const Vec& comparison = model.spec.probe == Probe::retrieved ? c.retrieval.read : c.query;
  score_into(trace, comparison, dp, p.get(two_sets ? "V_out" : "V"));
  trace.cache = std::move(c);
  return trace;
}

void dire_backward_into(const Model& model, const Datapoint& dp, const ForwardTrace& trace,
                        ParamSet& g) {
  require_kind(model, ModelKind::dire);
  require_fresh(model, trace);
  const auto& c = std::get<DireCache>(trace.cache);
  const auto& p = model.params;
  const bool two_sets = model.spec.matrix_sets == 2;
  const GateParams gate{p.scalar("w"), p.scalar("b")};

  reset_gradient(p, g);
  const Vec d_comparison = score_backward(trace, dp, g.get(two_sets ? "V_out" : "V"));
  Vec dq(c.query.dim());
  if (model.spec.probe == Probe::query) {
    dq = d_comparison;
  } else {
    const auto rg =
        attend_and_read_backward(c.library.entities(), c.values, c.query, c.retrieval, d_comparison);
    dq = rg.query;
    const BuildOptions build_opts{trace.options.fixed_p_old};
    BuildGradient bg;
    if (two_sets) {
      const auto replay = replay_insertions_backward(c.build, c.exposures_out, rg.values);
      bg = build_backward(c.build, gate, rg.keys, replay.dz, build_opts);
      for (std::size_t i = 0; i < dp.exposures.size(); ++i) {
        embed_exposure_backward(dp.exposures[i], hadamard(replay.exposures[i], c.masks[i]),
                                g.get("V_out"), g.get("A_out"));
      }
    } else {
      Mat d_library = rg.keys;
      d_library += rg.values;
      bg = build_backward(c.build, gate, d_library, {}, build_opts);
    }
    for (std::size_t i = 0; i < dp.exposures.size(); ++i) {
      embed_exposure_backward(dp.exposures[i], hadamard(bg.exposures[i], c.masks[i]), g.get("V"),
                              g.get("A"));
    }
    g.get("w")(0, 0) = bg.w;
    g.get("b")(0, 0) = bg.b;
  }
  embed_query_backward(dp.query, dq, g.get("C"), g.get("A"));
}

// ---------------------------------------------------------------------------
// Memory network

ForwardTrace memn_forward(const Model& model, const Datapoint& dp, const ForwardOptions& opt) {
  require_kind(model, ModelKind::memn);
  if (model.spec.hops < 1 || model.spec.hops > 3) {
    throw std::invalid_argument("memn_forward: hops must be 1, 2 or 3");
  }
  check_datapoint(model.dims, model.spec.kind, dp);
  const auto& p = model.params;
  const bool two_sets = model.spec.matrix_sets == 2;

  ForwardTrace trace = new_trace(model, opt);
  MemnCache c;
  Rng rng = dropout_rng(opt);
  std::vector<Vec> rows_in, rows_out;
  for (const auto& e : dp.exposures) {
    auto d = apply_dropout(embed_exposure(e.image, e.attribute, p.get("V"), p.get("A")),
                           opt.dropout, rng, opt.training);
    if (two_sets) {
      rows_out.push_back(
          hadamard(embed_exposure(e.image, e.attribute, p.get("V_out"), p.get("A_out")), d.mask));
    }
    rows_in.push_back(std::move(d.output));
    c.masks.push_back(std::move(d.mask));
  }
  c.memory_in = rows_to_mat(rows_in);
  c.memory_out = two_sets ? rows_to_mat(rows_out) : c.memory_in;
  c.query = embed_query(dp.query.noun, dp.query.attributes[0], dp.query.attributes[1], p.get("C"),
                        p.get("A"));
  c.probes.push_back(c.query);
  for (int h = 0; h < model.spec.hops; ++h) {
    c.hops.push_back(attend_and_read(c.memory_in, c.memory_out, c.probes.back()));
    c.probes.push_back(c.probes.back() + c.hops.back().read);
  }
  // Candidates are compared with the last retrieved vector, as DIRE compares
  // them with r; the probe sum only steers the next hop.
  score_into(trace, c.hops.back().read, dp, p.get(two_sets ? "V_out" : "V"));
  trace.cache = std::move(c);
  return trace;
}

void memn_backward_into(const Model& model, const Datapoint& dp, const ForwardTrace& trace,
                        ParamSet& g) {
  require_kind(model, ModelKind::memn);
  require_fresh(model, trace);
  const auto& c = std::get<MemnCache>(trace.cache);
  const auto& p = model.params;
  const bool two_sets = model.spec.matrix_sets == 2;

  reset_gradient(p, g);
  const Vec d_comparison = score_backward(trace, dp, g.get(two_sets ? "V_out" : "V"));
  Vec d_probe(d_comparison.dim());  // gradient on probe_{h+1}
  Mat d_in(c.memory_in.rows(), c.memory_in.cols());
  Mat d_out(c.memory_out.rows(), c.memory_out.cols());
  for (int h = model.spec.hops - 1; h >= 0; --h) {
    Vec d_read = d_probe;
    if (h == model.spec.hops - 1) d_read += d_comparison;
    const auto rg = attend_and_read_backward(c.memory_in, c.memory_out, c.probes[h], c.hops[h],
                                             d_read);
    d_in += rg.keys;
    d_out += rg.values;
    d_probe += rg.query;
  }
  if (!two_sets) d_in += d_out;
  for (std::size_t i = 0; i < dp.exposures.size(); ++i) {
    embed_exposure_backward(dp.exposures[i], hadamard(d_in.row_vec(i), c.masks[i]), g.get("V"),
                            g.get("A"));
    if (two_sets) {
      embed_exposure_backward(dp.exposures[i], hadamard(d_out.row_vec(i), c.masks[i]),
                              g.get("V_out"), g.get("A_out"));
    }
  }
  embed_query_backward(dp.query, d_probe, g.get("C"), g.get("A"));
}

// ---------------------------------------------------------------------------
// Feed-forward baseline

ForwardTrace ff_forward(const Model& model, const Datapoint& dp, const ForwardOptions& opt) {
  require_kind(model, ModelKind::ff);
  check_datapoint(model.dims, model.spec.kind, dp);
  const auto& p = model.params;

  ForwardTrace trace = new_trace(model, opt);
  FfCache c;
  Rng rng = dropout_rng(opt);
  std::vector<Vec> parts;
  for (const auto& e : dp.exposures) {
    auto d = apply_dropout(embed_exposure(e.image, e.attribute, p.get("V"), p.get("A")),
                           opt.dropout, rng, opt.training);
    parts.push_back(std::move(d.output));
    c.masks.push_back(std::move(d.mask));
  }
  c.query = embed_query(dp.query.noun, dp.query.attributes[0], dp.query.attributes[1], p.get("C"),
                        p.get("A"));
  parts.push_back(c.query);
  c.input = concat(parts);

  c.hidden1 = sigmoid(affine(p.get("W1"), p.get("b1"), c.input));
  auto d1 = apply_dropout(c.hidden1, opt.dropout, rng, opt.training);
  c.hidden1_out = std::move(d1.output);
  c.hidden1_mask = std::move(d1.mask);
  c.hidden2 = sigmoid(affine(p.get("W2"), p.get("b2"), c.hidden1_out));
  auto d2 = apply_dropout(c.hidden2, opt.dropout, rng, opt.training);
  c.hidden2_out = std::move(d2.output);
  c.hidden2_mask = std::move(d2.mask);

  score_into(trace, affine(p.get("W3"), p.get("b3"), c.hidden2_out), dp, p.get("V"));
  trace.cache = std::move(c);
  return trace;
}

void ff_backward_into(const Model& model, const Datapoint& dp, const ForwardTrace& trace,
                        ParamSet& g) {
  require_kind(model, ModelKind::ff);
  require_fresh(model, trace);
  const auto& c = std::get<FfCache>(trace.cache);
  const auto& p = model.params;
  const std::size_t m = model.dims.multimodal;

  reset_gradient(p, g);
  const Vec d_out = score_backward(trace, dp, g.get("V"));
  add_outer(g.get("W3"), c.hidden2_out, d_out);
  add_bias_grad(g.get("b3"), d_out);

  const Vec d_pre2 =
      sigmoid_backward(c.hidden2, hadamard(matvec(p.get("W3"), d_out), c.hidden2_mask));
  add_outer(g.get("W2"), c.hidden1_out, d_pre2);
  add_bias_grad(g.get("b2"), d_pre2);

  const Vec d_pre1 =
      sigmoid_backward(c.hidden1, hadamard(matvec(p.get("W2"), d_pre2), c.hidden1_mask));
  add_outer(g.get("W1"), c.input, d_pre1);
  add_bias_grad(g.get("b1"), d_pre1);

  const Vec d_input = matvec(p.get("W1"), d_pre1);
  const std::size_t n = dp.exposures.size();
  for (std::size_t i = 0; i < n; ++i) {
    embed_exposure_backward(dp.exposures[i], hadamard(slice(d_input, i * m, m), c.masks[i]),
                            g.get("V"), g.get("A"));
  }
  embed_query_backward(dp.query, slice(d_input, n * m, m), g.get("C"), g.get("A"));
}

// ---------------------------------------------------------------------------
// Recurrent baseline

ForwardTrace rnn_forward(const Model& model, const Datapoint& dp, const ForwardOptions& opt) {
  require_kind(model, ModelKind::rnn);
  check_datapoint(model.dims, model.spec.kind, dp);
  const auto& p = model.params;

  ForwardTrace trace = new_trace(model, opt);
  RnnCache c;
  Rng rng = dropout_rng(opt);
  c.states.push_back(Vec(model.dims.hidden));
  for (const auto& e : dp.exposures) {
    auto d = apply_dropout(embed_exposure(e.image, e.attribute, p.get("V"), p.get("A")),
                           opt.dropout, rng, opt.training);
    Vec pre = matvec_transposed(p.get("Wh"), c.states.back());
    pre += affine(p.get("Wu"), p.get("bh"), d.output);
    c.states.push_back(sigmoid(pre));
    c.exposures.push_back(std::move(d.output));
    c.masks.push_back(std::move(d.mask));
  }
  auto dn = apply_dropout(c.states.back(), opt.dropout, rng, opt.training);
  c.final_mask = std::move(dn.mask);
  c.query = embed_query(dp.query.noun, dp.query.attributes[0], dp.query.attributes[1], p.get("C"),
                        p.get("A"));
  const Vec parts[] = {dn.output, c.query};
  c.top_input = concat(parts);
  c.hidden = sigmoid(affine(p.get("W2"), p.get("b2"), c.top_input));
  auto dh = apply_dropout(c.hidden, opt.dropout, rng, opt.training);
  c.hidden_out = std::move(dh.output);
  c.hidden_mask = std::move(dh.mask);

  score_into(trace, affine(p.get("W3"), p.get("b3"), c.hidden_out), dp, p.get("V"));
  trace.cache = std::move(c);
  return trace;
}

void rnn_backward_into(const Model& model, const Datapoint& dp, const ForwardTrace& trace,
                        ParamSet& g) {
  require_kind(model, ModelKind::rnn);
  require_fresh(model, trace);
  const auto& c = std::get<RnnCache>(trace.cache);
  const auto& p = model.params;
  const std::size_t h = model.dims.hidden;

  reset_gradient(p, g);
  const Vec d_out = score_backward(trace, dp, g.get("V"));
  add_outer(g.get("W3"), c.hidden_out, d_out);
  add_bias_grad(g.get("b3"), d_out);

  const Vec d_pre2 =
      sigmoid_backward(c.hidden, hadamard(matvec(p.get("W3"), d_out), c.hidden_mask));
  add_outer(g.get("W2"), c.top_input, d_pre2);
  add_bias_grad(g.get("b2"), d_pre2);
  const Vec d_top = matvec(p.get("W2"), d_pre2);

  embed_query_backward(dp.query, slice(d_top, h, c.query.dim()), g.get("C"), g.get("A"));
  Vec d_state = hadamard(slice(d_top, 0, h), c.final_mask);
  for (std::size_t i = dp.exposures.size(); i >= 1; --i) {
    const Vec d_pre = sigmoid_backward(c.states[i], d_state);
    add_outer(g.get("Wh"), c.states[i - 1], d_pre);
    add_outer(g.get("Wu"), c.exposures[i - 1], d_pre);
    add_bias_grad(g.get("bh"), d_pre);
    embed_exposure_backward(dp.exposures[i - 1],
                            hadamard(matvec(p.get("Wu"), d_pre), c.masks[i - 1]), g.get("V"),
                            g.get("A"));
    d_state = matvec(p.get("Wh"), d_pre);
  }
}

// ---------------------------------------------------------------------------

ForwardTrace random_forward(const Model& model, const Datapoint& dp) {
  require_kind(model, ModelKind::random);
  check_datapoint(model.dims, model.spec.kind, dp);
  ForwardTrace trace = new_trace(model, {});
  const std::size_t k = dp.candidates.size();
  trace.scores = Vec(k);
  trace.distribution = Vec(k, 1.0 / static_cast<double>(k));
  trace.gold = dp.gold;
  trace.prediction = 0;
  trace.loss = std::log(static_cast<double>(k));
  return trace;
}

ForwardTrace forward(const Model& model, const Datapoint& dp, const ForwardOptions& opt) {
  switch (model.spec.kind) {
    case ModelKind::dire: return dire_forward(model, dp, opt);
    case ModelKind::memn: return memn_forward(model, dp, opt);
    case ModelKind::ff: return ff_forward(model, dp, opt);
    case ModelKind::rnn: return rnn_forward(model, dp, opt);
    case ModelKind::random: return random_forward(model, dp);
  }
  throw std::logic_error("forward: unknown model kind");
}

ParamSet dire_backward(const Model& model, const Datapoint& dp, const ForwardTrace& trace) {
  ParamSet g;
  dire_backward_into(model, dp, trace, g);
  return g;
}

ParamSet memn_backward(const Model& model, const Datapoint& dp, const ForwardTrace& trace) {
  ParamSet g;
  memn_backward_into(model, dp, trace, g);
  return g;
}

ParamSet ff_backward(const Model& model, const Datapoint& dp, const ForwardTrace& trace) {
  ParamSet g;
  ff_backward_into(model, dp, trace, g);
  return g;
}

ParamSet rnn_backward(const Model& model, const Datapoint& dp, const ForwardTrace& trace) {
  ParamSet g;
  rnn_backward_into(model, dp, trace, g);
  return g;
}

void backward_into(const Model& model, const Datapoint& dp, const ForwardTrace& trace,
                   ParamSet& grad) {
  switch (model.spec.kind) {
    case ModelKind::dire: return dire_backward_into(model, dp, trace, grad);
    case ModelKind::memn: return memn_backward_into(model, dp, trace, grad);
    case ModelKind::ff: return ff_backward_into(model, dp, trace, grad);
    case ModelKind::rnn: return rnn_backward_into(model, dp, trace, grad);
    case ModelKind::random:
      require_fresh(model, trace);
      reset_gradient(model.params, grad);
      return;
  }
  throw std::logic_error("backward: unknown model kind");
}

ParamSet backward(const Model& model, const Datapoint& dp, const ForwardTrace& trace) {
  ParamSet g;
  backward_into(model, dp, trace, g);
  return g;
}

double replay_loss(const Model& model, const Datapoint& dp, const ForwardTrace& trace) {
  return forward(model, dp, trace.options).loss;
}

}  // namespace dire
