#include "pushnet/predictors/train.hpp"

#include "pushnet/experiments/metrics.hpp"
#include "pushnet/sim/simulator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace pushnet::predictors {

nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"steps", c.steps},       {"batch", c.batch},     {"lr", c.lr},
          {"eval_every", c.eval_every}, {"patience", c.patience}, {"val_records", c.val_records},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.steps = j.value("steps", c.steps);
  c.batch = j.value("batch", c.batch);
  c.lr = j.value("lr", c.lr);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.patience = j.value("patience", c.patience);
  c.val_records = j.value("val_records", c.val_records);
  c.seed = j.value("seed", c.seed);
  if (c.steps < 0 || c.batch < 1 || c.eval_every < 1 || !(c.lr > 0.0) || c.val_records < 1)
    fail(ErrorKind::Config, "invalid training section (steps >= 0, batch >= 1, eval_every >= 1, lr > 0)");
  return c;
}

std::string log_header() {
  return "step,loss,trans,mag,rot,pos,contact,decay,val_trans_pct,val_rot_pct,val_pos_mm";
}

std::string log_line(const TrainLogRow& r) {
  return fmt::format("{},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g}", r.step, r.loss,
                     r.trans, r.mag, r.rot, r.pos, r.contact, r.decay, r.val_trans_pct, r.val_rot_pct, r.val_pos_mm);
}

namespace {

double scalar(const nn::Graph<float>& g, int v) { return v >= 0 ? static_cast<double>(g.value(v)[0]) : 0.0; }

struct Accumulator {
  TrainLogRow sum;
  int count = 0;

  void add(const nn::Graph<float>& g, const LossOutputs& o) {
    sum.loss += scalar(g, o.total);
    sum.trans += scalar(g, o.trans);
    sum.mag += scalar(g, o.mag);
    sum.rot += scalar(g, o.rot);
    sum.pos += scalar(g, o.pos);
    sum.contact += scalar(g, o.contact);
    sum.decay += scalar(g, o.decay);
    ++count;
  }

  TrainLogRow mean(std::int64_t step) const {
    TrainLogRow r = sum;
    const double n = std::max(1, count);
    r.step = step;
    r.loss /= n, r.trans /= n, r.mag /= n, r.rot /= n, r.pos /= n, r.contact /= n, r.decay /= n;
    return r;
  }
};

std::vector<float> snapshot(const nn::ParamStore<float>& ps) {
  std::vector<float> out;
  for (size_t i = 0; i < ps.size(); ++i) out.insert(out.end(), ps[i].value.values().begin(), ps[i].value.values().end());
  return out;
}

void restore(nn::ParamStore<float>& ps, const std::vector<float>& flat) {
  size_t k = 0;
  for (size_t i = 0; i < ps.size(); ++i)
    for (auto& v : ps[i].value.values()) v = flat[k++];
}

}  // namespace

TrainResult train(const Model& model, nn::ParamStore<float>& params, nn::AdamState& adam, const RecordSet& train_set,
                  const RecordSet& val_set, const InputSpec& spec, const TrainConfig& config, const LogSink& sink) {
  TrainResult result;
  result.final_step = adam.step;
  if (!is_learnable(model.variant())) return result;
  if (train_set.empty()) fail(ErrorKind::InvalidArgument, "train: empty training set");

  const RecordSet val(val_set.begin(), val_set.begin() + std::min<size_t>(val_set.size(), config.val_records));
  const bool images = has_perception(model.variant());
  const auto n = static_cast<std::uint64_t>(train_set.size());
  Accumulator acc;
  double best = std::numeric_limits<double>::infinity();
  std::vector<float> best_params;
  int stale = 0;

  while (adam.step < config.steps) {
    const std::int64_t step = adam.step;
    std::mt19937_64 rng = sim::record_rng(config.seed, 0x7261696e, static_cast<std::uint64_t>(step));
    std::uniform_int_distribution<std::uint64_t> pick(0, n - 1);
    RecordSet batch_records(config.batch);
    for (auto& r : batch_records) r = train_set[pick(rng)];
    const Batch batch = make_batch(batch_records, spec, model.arch(), images);

    params.zero_grad();
    nn::Graph<float> g;
    const Outputs out = model.forward(g, params, batch);
    const LossOutputs loss = model.loss(g, out, batch);
    const double value = scalar(g, loss.total);
    if (!std::isfinite(value))
      fail(ErrorKind::Divergence,
           fmt::format("training diverged at step {}: loss {} (trans {}, rot {}, pos {})", step, value,
                       scalar(g, loss.trans), scalar(g, loss.rot), scalar(g, loss.pos)));
    g.backward(loss.total);
    adam_step(params, adam);
    acc.add(g, loss);

    const bool last = adam.step >= config.steps;
    if (adam.step % config.eval_every != 0 && !last) continue;
    TrainLogRow row = acc.mean(adam.step);
    acc = Accumulator{};
    if (!val.empty()) {
      const auto preds = predict_records(model, params, val, spec);
      std::vector<Twist2> p, t;
      std::vector<double> pos;
      for (size_t i = 0; i < val.size(); ++i) {
        p.push_back(preds[i].twist);
        t.push_back(val[i]->label());
        if (preds[i].has_pos)
          pos.push_back((preds[i].pos - Vec2(val[i]->pose_before.x, val[i]->pose_before.y)).norm());
      }
      const auto m = experiments::summarize(experiments::error_samples(p, t, pos.empty() ? nullptr : &pos));
      row.val_trans_pct = m.trans_pct;
      row.val_rot_pct = m.rot_pct;
      row.val_pos_mm = m.pos_mm;
      if (config.patience > 0) {
        const double score = m.trans_pct + m.rot_pct;
        if (score < best) {
          best = score;
          best_params = snapshot(params);
          stale = 0;
        } else if (++stale >= config.patience) {
          result.early_stopped = true;
        }
      }
    }
    result.log.push_back(row);
    if (sink) sink(row);
    if (result.early_stopped) break;
  }
  if (!best_params.empty()) restore(params, best_params);
  result.best_val = best;
  result.final_step = adam.step;
  return result;
}

std::vector<PredictionRow> predict_records(const Model& model, nn::ParamStore<float>& params, const RecordSet& records,
                                           const InputSpec& spec, int chunk) {
  std::vector<PredictionRow> rows(records.size());
  const Variant v = model.variant();
  if (v == Variant::Zero) return rows;
  if (v == Variant::Physics) {
    for (size_t i = 0; i < records.size(); ++i) rows[i].twist = physics_prediction(*records[i], model.arch().l_factor);
    return rows;
  }
  for (size_t start = 0; start < records.size(); start += chunk) {
    const size_t end = std::min(records.size(), start + static_cast<size_t>(chunk));
    const RecordSet part(records.begin() + start, records.begin() + end);
    const Batch batch = make_batch(part, spec, model.arch(), has_perception(v));
    nn::Graph<float> g;
    const Outputs out = model.forward(g, params, batch);
    for (size_t i = 0; i < part.size(); ++i) {
      PredictionRow& r = rows[start + i];
      const auto& t = g.value(out.twist);
      r.twist = Twist2{t[3 * i], t[3 * i + 1], t[3 * i + 2]};
      if (out.pos >= 0) {
        r.has_pos = true;
        r.pos = Vec2(g.value(out.pos)[2 * i], g.value(out.pos)[2 * i + 1]);
      }
      if (out.c >= 0 && out.n >= 0 && out.s >= 0) {
        r.has_contact = true;
        r.contact.c = Vec2(g.value(out.c)[2 * i], g.value(out.c)[2 * i + 1]);
        r.contact.n = Vec2(g.value(out.n)[2 * i], g.value(out.n)[2 * i + 1]);
        r.contact.s = g.value(out.s)[i];
      }
    }
  }
  return rows;
}

}  // namespace pushnet::predictors
