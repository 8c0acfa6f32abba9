#include "rvox/framefilter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rvox/imaging.hpp"

namespace rvox::filter {

const char* to_string(PoolKind k) {
  return k == PoolKind::Average ? "average" : "max";
}

const char* to_string(Verdict v) {
  return v == Verdict::Regular ? "regular" : "ambiguous";
}

const char* to_string(StreamFlag f) {
  switch (f) {
    case StreamFlag::Fresh:
      return "fresh";
    case StreamFlag::Held:
      return "held";
    default:
      return "unverified";
  }
}

std::size_t NetShape::param_count() const {
  return c1_out * kKernel * kKernel + c1_out +
         c2_out * c1_out * kKernel * kKernel + c2_out + 2 * feature_dim() + 2;
}

void NetShape::validate() const {
  if (c1_out < 1 || c2_out < 1) {
    throw std::invalid_argument("net shape: channel counts must be >= 1");
  }
  if (input_hw < kKernel || pool1_hw() < kKernel || pool2_hw() < 1) {
    throw std::invalid_argument("net shape: input too small for the layer stack");
  }
}

ClassifierModel make_classifier(PoolKind pooling, std::uint64_t seed,
                                const NetShape& shape) {
  shape.validate();
  ClassifierModel model;
  model.shape = shape;
  model.pooling = pooling;

  Rng rng(seed);
  auto fill = [&rng](std::vector<double>& v, std::size_t count, double fan_in) {
    double a = 1.0 / std::sqrt(fan_in);
    v.resize(count);
    for (double& x : v) x = rng.uniform(-a, a);
  };
  std::size_t k2 = NetShape::kKernel * NetShape::kKernel;
  fill(model.conv1_w, shape.c1_out * k2, static_cast<double>(k2));
  fill(model.conv1_b, shape.c1_out, static_cast<double>(k2));
  fill(model.conv2_w, shape.c2_out * shape.c1_out * k2,
       static_cast<double>(shape.c1_out * k2));
  fill(model.conv2_b, shape.c2_out, static_cast<double>(shape.c1_out * k2));
  fill(model.fc_w, 2 * shape.feature_dim(),
       static_cast<double>(shape.feature_dim()));
  fill(model.fc_b, 2, static_cast<double>(shape.feature_dim()));
  return model;
}

ClassifierInput extract_input(const recon::PowerGrid& grid) {
  imaging::VoxelIndex peak = imaging::peak_voxel(grid);
  imaging::HeatMap2D slice = imaging::heatmap_slice(grid, peak.j);

  ClassifierInput out;
  out.hw = 32;
  out.values.assign(out.hw * out.hw, 0.0);

  auto sample = [&slice](double sy, double sx) {
    double y = std::clamp(sy, 0.0, static_cast<double>(slice.n_r - 1));
    double x = std::clamp(sx, 0.0, static_cast<double>(slice.n_phi - 1));
    std::size_t y0 = static_cast<std::size_t>(y);
    std::size_t x0 = static_cast<std::size_t>(x);
    std::size_t y1 = std::min(y0 + 1, slice.n_r - 1);
    std::size_t x1 = std::min(x0 + 1, slice.n_phi - 1);
    double fy = y - static_cast<double>(y0);
    double fx = x - static_cast<double>(x0);
    double top = slice.at(y0, x0) * (1.0 - fx) + slice.at(y0, x1) * fx;
    double bot = slice.at(y1, x0) * (1.0 - fx) + slice.at(y1, x1) * fx;
    return top * (1.0 - fy) + bot * fy;
  };

  double sy_scale = static_cast<double>(slice.n_r) / static_cast<double>(out.hw);
  double sx_scale =
      static_cast<double>(slice.n_phi) / static_cast<double>(out.hw);
  double peak_val = 0.0;
  for (std::size_t y = 0; y < out.hw; ++y) {
    for (std::size_t x = 0; x < out.hw; ++x) {
      double v = sample((static_cast<double>(y) + 0.5) * sy_scale - 0.5,
                        (static_cast<double>(x) + 0.5) * sx_scale - 0.5);
      out.at(y, x) = v;
      if (v > peak_val) peak_val = v;
    }
  }
  if (peak_val > 0.0) {
    for (double& v : out.values) v /= peak_val;
  }
  return out;
}

namespace {

struct Activations {
  std::vector<double> conv1;      // [c1][conv1_hw][conv1_hw]
  std::vector<double> pool1;      // [c1][pool1_hw][pool1_hw]
  std::vector<std::size_t> arg1;  // argmax offsets when max pooling
  std::vector<double> conv2;      // [c2][conv2_hw][conv2_hw]
  std::vector<double> pool2;      // [c2][pool2_hw][pool2_hw]
  std::vector<std::size_t> arg2;
  std::vector<double> feat;          // [c2]
  std::vector<std::size_t> arg_gp;   // global pool argmax per channel
  std::array<double, 2> logits{0.0, 0.0};
};

void check_model(const ClassifierModel& m) {
  m.shape.validate();
  std::size_t k2 = NetShape::kKernel * NetShape::kKernel;
  if (m.conv1_w.size() != m.shape.c1_out * k2 ||
      m.conv1_b.size() != m.shape.c1_out ||
      m.conv2_w.size() != m.shape.c2_out * m.shape.c1_out * k2 ||
      m.conv2_b.size() != m.shape.c2_out ||
      m.fc_w.size() != 2 * m.shape.feature_dim() || m.fc_b.size() != 2) {
    throw std::invalid_argument("classifier tensors do not match the shape");
  }
}

// Valid 3x3 convolution of `in` (ci channels, in_hw square) into `out`.
void conv_forward(const std::vector<double>& in, std::size_t ci,
                  std::size_t in_hw, const std::vector<double>& w,
                  const std::vector<double>& b, std::size_t co,
                  std::vector<double>& out) {
  constexpr std::size_t K = NetShape::kKernel;
  std::size_t out_hw = in_hw - K + 1;
  out.assign(co * out_hw * out_hw, 0.0);
  for (std::size_t o = 0; o < co; ++o) {
    for (std::size_t y = 0; y < out_hw; ++y) {
      for (std::size_t x = 0; x < out_hw; ++x) {
        double acc = b[o];
        for (std::size_t c = 0; c < ci; ++c) {
          const double* wp = &w[(o * ci + c) * K * K];
          const double* ip = &in[c * in_hw * in_hw];
          for (std::size_t ky = 0; ky < K; ++ky) {
            for (std::size_t kx = 0; kx < K; ++kx) {
              acc += wp[ky * K + kx] * ip[(y + ky) * in_hw + (x + kx)];
            }
          }
        }
        out[(o * out_hw + y) * out_hw + x] = acc;
      }
    }
  }
}

// 2x2 stride-2 pooling; odd trailing rows and columns are dropped. For max
// pooling `argmax` records the winning input offset per output cell.
void pool_forward(const std::vector<double>& in, std::size_t channels,
                  std::size_t in_hw, PoolKind kind, std::vector<double>& out,
                  std::vector<std::size_t>& argmax) {
  std::size_t out_hw = in_hw / 2;
  out.assign(channels * out_hw * out_hw, 0.0);
  argmax.assign(kind == PoolKind::Max ? out.size() : 0, 0);
  for (std::size_t c = 0; c < channels; ++c) {
    const double* ip = &in[c * in_hw * in_hw];
    for (std::size_t y = 0; y < out_hw; ++y) {
      for (std::size_t x = 0; x < out_hw; ++x) {
        std::size_t base = 2 * y * in_hw + 2 * x;
        std::size_t cells[4] = {base, base + 1, base + in_hw, base + in_hw + 1};
        std::size_t oi = (c * out_hw + y) * out_hw + x;
        if (kind == PoolKind::Average) {
          out[oi] = 0.25 * (ip[cells[0]] + ip[cells[1]] + ip[cells[2]] +
                            ip[cells[3]]);
        } else {
          std::size_t best = cells[0];
          for (int q = 1; q < 4; ++q) {
            if (ip[cells[q]] > ip[best]) best = cells[q];
          }
          out[oi] = ip[best];
          argmax[oi] = c * in_hw * in_hw + best;
        }
      }
    }
  }
}

void forward_pass(const ClassifierModel& m, const ClassifierInput& input,
                  Activations& act) {
  check_model(m);
  const NetShape& s = m.shape;
  if (input.hw != s.input_hw || input.values.size() != s.input_hw * s.input_hw) {
    throw std::invalid_argument("classifier input does not match the net shape");
  }

  conv_forward(input.values, 1, s.input_hw, m.conv1_w, m.conv1_b, s.c1_out,
               act.conv1);
  pool_forward(act.conv1, s.c1_out, s.conv1_hw(), m.pooling, act.pool1,
               act.arg1);
  conv_forward(act.pool1, s.c1_out, s.pool1_hw(), m.conv2_w, m.conv2_b,
               s.c2_out, act.conv2);
  pool_forward(act.conv2, s.c2_out, s.conv2_hw(), m.pooling, act.pool2,
               act.arg2);

  std::size_t area = s.pool2_hw() * s.pool2_hw();
  act.feat.assign(s.c2_out, 0.0);
  act.arg_gp.assign(m.pooling == PoolKind::Max ? s.c2_out : 0, 0);
  for (std::size_t c = 0; c < s.c2_out; ++c) {
    const double* p = &act.pool2[c * area];
    if (m.pooling == PoolKind::Average) {
      double acc = 0.0;
      for (std::size_t q = 0; q < area; ++q) acc += p[q];
      act.feat[c] = acc / static_cast<double>(area);
    } else {
      std::size_t best = 0;
      for (std::size_t q = 1; q < area; ++q) {
        if (p[q] > p[best]) best = q;
      }
      act.feat[c] = p[best];
      act.arg_gp[c] = best;
    }
  }

  for (int j = 0; j < 2; ++j) {
    double acc = m.fc_b[j];
    for (std::size_t f = 0; f < s.feature_dim(); ++f) {
      acc += m.fc_w[j * s.feature_dim() + f] * act.feat[f];
    }
    act.logits[j] = acc;
  }
}

void conv_backward(const std::vector<double>& in, std::size_t ci,
                   std::size_t in_hw, const std::vector<double>& w,
                   std::size_t co, const std::vector<double>& dout,
                   std::vector<double>& dw, std::vector<double>& db,
                   std::vector<double>& din) {
  constexpr std::size_t K = NetShape::kKernel;
  std::size_t out_hw = in_hw - K + 1;
  din.assign(ci * in_hw * in_hw, 0.0);
  for (std::size_t o = 0; o < co; ++o) {
    for (std::size_t y = 0; y < out_hw; ++y) {
      for (std::size_t x = 0; x < out_hw; ++x) {
        double g = dout[(o * out_hw + y) * out_hw + x];
        db[o] += g;
        for (std::size_t c = 0; c < ci; ++c) {
          double* dwp = &dw[(o * ci + c) * K * K];
          const double* wp = &w[(o * ci + c) * K * K];
          const double* ip = &in[c * in_hw * in_hw];
          double* dip = &din[c * in_hw * in_hw];
          for (std::size_t ky = 0; ky < K; ++ky) {
            for (std::size_t kx = 0; kx < K; ++kx) {
              std::size_t ii = (y + ky) * in_hw + (x + kx);
              dwp[ky * K + kx] += g * ip[ii];
              dip[ii] += g * wp[ky * K + kx];
            }
          }
        }
      }
    }
  }
}

void pool_backward(std::size_t channels, std::size_t in_hw, PoolKind kind,
                   const std::vector<double>& dout,
                   const std::vector<std::size_t>& argmax,
                   std::vector<double>& din) {
  std::size_t out_hw = in_hw / 2;
  din.assign(channels * in_hw * in_hw, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < out_hw; ++y) {
      for (std::size_t x = 0; x < out_hw; ++x) {
        std::size_t oi = (c * out_hw + y) * out_hw + x;
        double g = dout[oi];
        if (kind == PoolKind::Average) {
          std::size_t base = c * in_hw * in_hw + 2 * y * in_hw + 2 * x;
          din[base] += 0.25 * g;
          din[base + 1] += 0.25 * g;
          din[base + in_hw] += 0.25 * g;
          din[base + in_hw + 1] += 0.25 * g;
        } else {
          din[argmax[oi]] += g;
        }
      }
    }
  }
}

double backward_pass(const ClassifierModel& m, const ClassifierInput& input,
                     int label, const Activations& act, Gradients& grads) {
  const NetShape& s = m.shape;
  double loss = cross_entropy(act.logits, label);

  double mx = std::max(act.logits[0], act.logits[1]);
  double e0 = std::exp(act.logits[0] - mx);
  double e1 = std::exp(act.logits[1] - mx);
  double inv_sum = 1.0 / (e0 + e1);
  std::array<double, 2> dlogit = {e0 * inv_sum, e1 * inv_sum};
  dlogit[label] -= 1.0;

  std::vector<double> dfeat(s.feature_dim(), 0.0);
  for (int j = 0; j < 2; ++j) {
    grads.fc_b[j] += dlogit[j];
    for (std::size_t f = 0; f < s.feature_dim(); ++f) {
      grads.fc_w[j * s.feature_dim() + f] += dlogit[j] * act.feat[f];
      dfeat[f] += dlogit[j] * m.fc_w[j * s.feature_dim() + f];
    }
  }

  std::size_t area = s.pool2_hw() * s.pool2_hw();
  std::vector<double> dpool2(s.c2_out * area, 0.0);
  for (std::size_t c = 0; c < s.c2_out; ++c) {
    if (m.pooling == PoolKind::Average) {
      double g = dfeat[c] / static_cast<double>(area);
      for (std::size_t q = 0; q < area; ++q) dpool2[c * area + q] += g;
    } else {
      dpool2[c * area + act.arg_gp[c]] += dfeat[c];
    }
  }

  std::vector<double> dconv2;
  pool_backward(s.c2_out, s.conv2_hw(), m.pooling, dpool2, act.arg2, dconv2);
  std::vector<double> dpool1;
  conv_backward(act.pool1, s.c1_out, s.pool1_hw(), m.conv2_w, s.c2_out, dconv2,
                grads.conv2_w, grads.conv2_b, dpool1);
  std::vector<double> dconv1;
  pool_backward(s.c1_out, s.conv1_hw(), m.pooling, dpool1, act.arg1, dconv1);
  std::vector<double> dinput;
  conv_backward(input.values, 1, s.input_hw, m.conv1_w, s.c1_out, dconv1,
                grads.conv1_w, grads.conv1_b, dinput);
  return loss;
}

}  // namespace

std::array<double, 2> forward(const ClassifierModel& model,
                              const ClassifierInput& input) {
  Activations act;
  forward_pass(model, input, act);
  return act.logits;
}

double cross_entropy(const std::array<double, 2>& logits, int label) {
  if (label != 0 && label != 1) {
    throw std::invalid_argument("cross_entropy: label must be 0 or 1");
  }
  double mx = std::max(logits[0], logits[1]);
  double lse = mx + std::log(std::exp(logits[0] - mx) + std::exp(logits[1] - mx));
  return lse - logits[label];
}

Gradients zero_gradients(const NetShape& shape) {
  shape.validate();
  std::size_t k2 = NetShape::kKernel * NetShape::kKernel;
  Gradients g;
  g.conv1_w.assign(shape.c1_out * k2, 0.0);
  g.conv1_b.assign(shape.c1_out, 0.0);
  g.conv2_w.assign(shape.c2_out * shape.c1_out * k2, 0.0);
  g.conv2_b.assign(shape.c2_out, 0.0);
  g.fc_w.assign(2 * shape.feature_dim(), 0.0);
  g.fc_b.assign(2, 0.0);
  return g;
}

double loss_and_gradients(const ClassifierModel& model, const LabeledInput& sample,
                          Gradients& grads) {
  Activations act;
  forward_pass(model, sample.input, act);
  return backward_pass(model, sample.input, sample.label, act, grads);
}

std::vector<EpochStats> train(ClassifierModel& model,
                              const std::vector<LabeledInput>& dataset,
                              const TrainConfig& cfg) {
  check_model(model);
  if (dataset.empty()) {
    throw std::invalid_argument("train: dataset is empty");
  }
  bool has[2] = {false, false};
  for (const LabeledInput& s : dataset) {
    if (s.label != 0 && s.label != 1) {
      throw std::invalid_argument("train: labels must be 0 or 1");
    }
    has[s.label] = true;
  }
  if (!has[0] || !has[1]) {
    throw std::invalid_argument("train: dataset must contain both classes");
  }
  if (cfg.minibatch_size < 1 || cfg.lr_step_epochs < 1) {
    throw std::invalid_argument("train: config counts must be >= 1");
  }

  Gradients velocity = zero_gradients(model.shape);
  Rng rng(cfg.rng_seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<EpochStats> history;
  history.reserve(cfg.epochs);

  auto step_tensor = [&cfg](std::vector<double>& param, std::vector<double>& vel,
                            const std::vector<double>& grad, double lr,
                            double batch_inv) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      vel[i] = cfg.momentum * vel[i] + grad[i] * batch_inv;
      param[i] -= lr * vel[i];
    }
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double lr = cfg.learning_rate *
                std::pow(cfg.lr_gamma,
                         static_cast<double>(epoch / cfg.lr_step_epochs));
    rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.minibatch_size) {
      std::size_t end = std::min(start + cfg.minibatch_size, order.size());
      Gradients grads = zero_gradients(model.shape);
      for (std::size_t q = start; q < end; ++q) {
        const LabeledInput& s = dataset[order[q]];
        Activations act;
        forward_pass(model, s.input, act);
        loss_sum += backward_pass(model, s.input, s.label, act, grads);
        int predicted = act.logits[1] > act.logits[0] ? 1 : 0;
        if (predicted == s.label) ++correct;
      }
      double batch_inv = 1.0 / static_cast<double>(end - start);
      step_tensor(model.conv1_w, velocity.conv1_w, grads.conv1_w, lr, batch_inv);
      step_tensor(model.conv1_b, velocity.conv1_b, grads.conv1_b, lr, batch_inv);
      step_tensor(model.conv2_w, velocity.conv2_w, grads.conv2_w, lr, batch_inv);
      step_tensor(model.conv2_b, velocity.conv2_b, grads.conv2_b, lr, batch_inv);
      step_tensor(model.fc_w, velocity.fc_w, grads.fc_w, lr, batch_inv);
      step_tensor(model.fc_b, velocity.fc_b, grads.fc_b, lr, batch_inv);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.running_loss = loss_sum / static_cast<double>(dataset.size());
    stats.accuracy =
        static_cast<double>(correct) / static_cast<double>(dataset.size());
    history.push_back(stats);
  }
  return history;
}

Verdict classify(const ClassifierModel& model, const ClassifierInput& input) {
  std::array<double, 2> logits = forward(model, input);
  return logits[1] > logits[0] ? Verdict::Ambiguous : Verdict::Regular;
}

StreamResult stream_filter(StreamState& state, const recon::PowerGrid& frame,
                           Verdict verdict) {
  StreamResult result;
  if (verdict == Verdict::Regular) {
    result.output = frame;
    result.flag = StreamFlag::Fresh;
    state.last_regular = frame;
    state.held_count = 0;
  } else if (state.last_regular.has_value()) {
    result.output = *state.last_regular;
    result.flag = StreamFlag::Held;
    ++state.held_count;
  } else {
    result.output = frame;
    result.flag = StreamFlag::Unverified;
  }
  return result;
}

}  // namespace rvox::filter
