#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

#include "convnet/errors.hpp"
#include "convnet/tensor_io.hpp"
#include "convnet/trainer.hpp"

namespace convnet {

void LearningCurve::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open " + path + " for writing");
    out << "epoch,train_loss,train_error,val_loss,val_error,lr,momentum,seconds\n";
    for (const CurveRow& r : rows) {
        out << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.train_error)
            << ',' << format_double(r.val_loss) << ',' << format_double(r.val_error) << ','
            << format_double(r.lr) << ',' << format_double(r.momentum) << ','
            << format_double(r.seconds) << '\n';
    }
    if (!out) throw data_error("failed writing " + path);
}

LearningCurve LearningCurve::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path);
    LearningCurve curve;
    std::string line;
    if (!std::getline(in, line)) throw data_error(path + ": empty curve file");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 8) throw data_error(path + ": bad curve row '" + line + "'");
        CurveRow r;
        r.epoch = static_cast<std::size_t>(std::stoull(cells[0]));
        r.train_loss = parse_double(cells[1]);
        r.train_error = parse_double(cells[2]);
        r.val_loss = parse_double(cells[3]);
        r.val_error = parse_double(cells[4]);
        r.lr = parse_double(cells[5]);
        r.momentum = parse_double(cells[6]);
        r.seconds = parse_double(cells[7]);
        curve.rows.push_back(r);
    }
    return curve;
}

void EarlyStop::push(double val_error) {
    buf_.push_back(val_error);
    if (buf_.size() > window_) buf_.pop_front();
}

bool EarlyStop::should_stop() const {
    if (window_ == 0 || buf_.size() < window_) return false;
    const double oldest = buf_.front();
    for (std::size_t i = 1; i < buf_.size(); ++i) {
        if (buf_[i] <= oldest) return false;
    }
    return true;
}

void EarlyStop::restore(const std::vector<double>& oldest_first) {
    buf_.assign(oldest_first.begin(), oldest_first.end());
    while (buf_.size() > window_) buf_.pop_front();
}

std::vector<Tensor> snapshot_params(Network& net) {
    std::vector<Tensor> out;
    for (ParamGroup* g : net.param_groups()) out.push_back(g->value);
    return out;
}

void restore_params(Network& net, const std::vector<Tensor>& params) {
    auto groups = net.param_groups();
    if (groups.size() != params.size()) {
        throw shape_error("checkpoint holds " + std::to_string(params.size()) +
                          " parameter tensors, network has " + std::to_string(groups.size()));
    }
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (groups[i]->value.shape() != params[i].shape()) {
            throw shape_error("parameter " + std::to_string(i) + ": checkpoint " +
                              params[i].shape_str() + " vs network " +
                              groups[i]->value.shape_str());
        }
        groups[i]->value = params[i];
    }
}

void Checkpoint::save(const std::string& path) const {
    TensorFile f;
    f.put_meta("what", "checkpoint");
    f.put_meta("epoch", std::to_string(epoch));
    f.put_meta("seed", std::to_string(seed));
    f.put_meta("config_hash", config_hash);
    f.put_meta("has_best", has_best ? "1" : "0");
    f.put_meta("best_epoch", std::to_string(best_epoch));
    f.put_meta("best_val_error", format_double(best_val_error));
    std::string es;
    for (std::size_t i = 0; i < early_stop.size(); ++i) {
        if (i) es += ',';
        es += format_double(early_stop[i]);
    }
    f.put_meta("early_stop", es);
    f.put_meta("n_params", std::to_string(params.size()));
    for (const auto& [k, v] : extra_meta) f.put_meta(k, v);
    for (std::size_t i = 0; i < params.size(); ++i) {
        f.put_tensor("param" + std::to_string(i), params[i]);
        f.put_tensor("vel" + std::to_string(i), velocities[i]);
    }
    if (has_best) {
        for (std::size_t i = 0; i < best_params.size(); ++i) {
            f.put_tensor("best" + std::to_string(i), best_params[i]);
        }
    }
    const std::string tmp = path + ".tmp";
    f.save(tmp);
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw data_error("cannot move " + tmp + " to " + path);
    }
}

Checkpoint Checkpoint::load(const std::string& path) {
    TensorFile f = TensorFile::load(path);
    if (!f.has_meta("what") || f.meta("what") != "checkpoint") {
        throw data_error(path + " is not a checkpoint");
    }
    Checkpoint ck;
    ck.epoch = static_cast<std::size_t>(std::stoull(f.meta("epoch")));
    ck.seed = std::stoull(f.meta("seed"));
    ck.config_hash = f.meta("config_hash");
    ck.has_best = f.meta("has_best") == "1";
    ck.best_epoch = static_cast<std::size_t>(std::stoull(f.meta("best_epoch")));
    ck.best_val_error = parse_double(f.meta("best_val_error"));
    const std::string& es = f.meta("early_stop");
    std::stringstream ss(es);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty()) ck.early_stop.push_back(parse_double(cell));
    }
    const auto n = static_cast<std::size_t>(std::stoull(f.meta("n_params")));
    for (std::size_t i = 0; i < n; ++i) {
        ck.params.push_back(f.tensor("param" + std::to_string(i)));
        ck.velocities.push_back(f.tensor("vel" + std::to_string(i)));
        if (ck.has_best) ck.best_params.push_back(f.tensor("best" + std::to_string(i)));
    }
    static const char* known[] = {"what",       "epoch",          "seed",
                                  "config_hash", "has_best",       "best_epoch",
                                  "best_val_error", "early_stop", "n_params"};
    for (const auto& [k, v] : f.all_meta()) {
        bool own = false;
        for (const char* w : known) own = own || k == w;
        if (!own) ck.extra_meta.emplace_back(k, v);
    }
    return ck;
}

namespace {

[[noreturn]] void diagnose_nonfinite(Network& net, const Tensor& x, std::size_t epoch,
                                     std::size_t batch) {
    net.freeze_dropout(true);
    std::string where = "the loss";
    Tensor cur = x;
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        cur = net.layer(i).forward(cur, true);
        if (!cur.all_finite()) {
            where = "layer " + std::to_string(i) + " (" + net.layer(i).describe() + ")";
            break;
        }
    }
    net.freeze_dropout(false);
    throw numeric_error("epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) +
                        ": non-finite values first appear in " + where);
}

Checkpoint make_checkpoint(Network& net, Optimizer& opt, const TrainOptions& opts,
                           std::size_t completed_epochs, const TrainResult& res,
                           const std::vector<Tensor>& best_params, const EarlyStop& stop) {
    Checkpoint ck;
    ck.epoch = completed_epochs;
    ck.seed = opts.seed;
    ck.config_hash = opts.config_hash;
    ck.params = snapshot_params(net);
    ck.velocities = opt.velocities();
    ck.has_best = !best_params.empty();
    ck.best_epoch = res.best_epoch;
    ck.best_val_error = ck.has_best ? res.best_val_error : 1.0;
    ck.best_params = best_params;
    ck.early_stop.assign(stop.values().begin(), stop.values().end());
    ck.extra_meta = opts.extra_meta;
    return ck;
}

} // namespace

TrainResult train(Network& net, const TrainSchedule& schedule, const TrainOptions& opts,
                  const LabeledDataset& train_set, const LabeledDataset& val_set,
                  const Checkpoint* resume) {
    if (train_set.size() == 0) throw data_error("empty training set");
    if (val_set.size() == 0) throw data_error("empty validation set");
    if (schedule.batch_size == 0) throw config_error("batch size must be positive");
    if (opts.max_epochs == 0 && opts.early_stop_window == 0) {
        throw config_error("either max_epochs or an early-stop window must bound the run");
    }

    Optimizer opt(net.param_groups(), schedule);
    EarlyStop stop(opts.early_stop_window);
    Rng root(opts.seed);
    const Rng data_root = root.fork(1);
    const Rng drop_root = root.fork(2);

    TrainResult res;
    res.best_val_error = std::numeric_limits<double>::infinity();
    std::vector<Tensor> best_params;
    std::size_t start_epoch = 0;

    if (resume) {
        if (!opts.config_hash.empty() && !resume->config_hash.empty() &&
            opts.config_hash != resume->config_hash) {
            throw config_error("checkpoint was written under configuration hash " +
                               resume->config_hash + ", current is " + opts.config_hash);
        }
        if (resume->seed != opts.seed) {
            throw config_error("checkpoint seed " + std::to_string(resume->seed) +
                               " differs from requested " + std::to_string(opts.seed));
        }
        restore_params(net, resume->params);
        auto& vel = opt.velocities();
        if (vel.size() != resume->velocities.size()) {
            throw shape_error("checkpoint velocity count mismatch");
        }
        for (std::size_t i = 0; i < vel.size(); ++i) vel[i] = resume->velocities[i];
        stop.restore(resume->early_stop);
        start_epoch = resume->epoch;
        if (resume->has_best) {
            best_params = resume->best_params;
            res.best_epoch = resume->best_epoch;
            res.best_val_error = resume->best_val_error;
        }
    }

    std::ofstream curve_out;
    if (!opts.curve_path.empty()) {
        curve_out.open(opts.curve_path, resume ? std::ios::app : std::ios::trunc);
        if (!curve_out) throw data_error("cannot open " + opts.curve_path + " for writing");
        if (!resume) {
            curve_out << "epoch,train_loss,train_error,val_loss,val_error,lr,momentum,seconds\n";
            curve_out.flush();
        }
    }

    const std::size_t n = train_set.size();
    for (std::size_t epoch = start_epoch;; ++epoch) {
        if (opts.max_epochs != 0 && epoch >= opts.max_epochs) break;
        const auto t0 = std::chrono::steady_clock::now();

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng erng = data_root.fork(epoch);
        erng.shuffle(order);
        net.seed_dropout(drop_root.fork(epoch));

        std::size_t batch_no = 0;
        for (std::size_t at = 0; at < n; at += schedule.batch_size, ++batch_no) {
            const std::size_t take = std::min(schedule.batch_size, n - at);
            std::vector<std::size_t> idx(order.begin() + at, order.begin() + at + take);
            LabeledDataset batch = train_set.subset(idx);
            opt.step(epoch, [&] {
                Tensor logits = net.forward(batch.images, true);
                if (!logits.all_finite()) diagnose_nonfinite(net, batch.images, epoch, batch_no);
                net.backward(softmax_xent_backward(logits, batch.labels));
            });
            if (opts.on_step) opts.on_step(epoch, batch_no);
        }

        const LossReport tr = evaluate(net, train_set, schedule.batch_size);
        const LossReport va = evaluate(net, val_set, schedule.batch_size);
        if (!std::isfinite(tr.loss) || !std::isfinite(va.loss)) {
            throw numeric_error("epoch " + std::to_string(epoch) + ": non-finite evaluation loss");
        }

        CurveRow row;
        row.epoch = epoch;
        row.train_loss = tr.loss;
        row.train_error = tr.error_rate;
        row.val_loss = va.loss;
        row.val_error = va.error_rate;
        row.lr = lr_at(schedule, epoch);
        row.momentum = momentum_at(schedule, epoch);
        row.seconds = opts.measure_time
                          ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                                .count()
                          : 0.0;
        res.curve.rows.push_back(row);
        if (curve_out.is_open()) {
            curve_out << row.epoch << ',' << format_double(row.train_loss) << ','
                      << format_double(row.train_error) << ',' << format_double(row.val_loss)
                      << ',' << format_double(row.val_error) << ',' << format_double(row.lr)
                      << ',' << format_double(row.momentum) << ','
                      << format_double(row.seconds) << '\n';
            curve_out.flush();
        }
        if (opts.verbose) {
            std::cout << "epoch " << row.epoch << ": train loss " << row.train_loss << " err "
                      << row.train_error << " | val loss " << row.val_loss << " err "
                      << row.val_error << " | lr " << row.lr << " mu " << row.momentum
                      << "\n";
        }

        if (va.error_rate < res.best_val_error) {
            res.best_val_error = va.error_rate;
            res.best_epoch = epoch;
            best_params = snapshot_params(net);
        }
        stop.push(va.error_rate);
        res.epochs_run = epoch + 1;

        if (!opts.checkpoint_path.empty()) {
            make_checkpoint(net, opt, opts, epoch + 1, res, best_params, stop)
                .save(opts.checkpoint_path);
        }
        if (stop.should_stop()) {
            res.stopped_early = true;
            break;
        }
    }

    res.checkpoint = make_checkpoint(net, opt, opts, res.epochs_run, res, best_params, stop);
    return res;
}

LossReport evaluate(Network& net, const LabeledDataset& ds, std::size_t batch_size) {
    if (batch_size == 0) throw config_error("batch size must be positive");
    const std::size_t n = ds.size();
    double loss_sum = 0.0;
    std::size_t wrong = 0;
    for (std::size_t at = 0; at < n; at += batch_size) {
        const std::size_t take = std::min(batch_size, n - at);
        std::vector<std::size_t> idx(take);
        std::iota(idx.begin(), idx.end(), at);
        LabeledDataset batch = ds.subset(idx);
        const Tensor logits = net.forward(batch.images, false);
        const LossReport r = cross_entropy(softmax(logits), batch.labels);
        loss_sum += r.loss * static_cast<double>(r.count);
        wrong += r.misclassified;
    }
    LossReport rep;
    rep.count = n;
    rep.misclassified = wrong;
    rep.loss = n == 0 ? 0.0 : loss_sum / static_cast<double>(n);
    rep.error_rate = n == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(n);
    return rep;
}

std::vector<int> predict(Network& net, const Tensor& images, std::size_t batch_size) {
    if (batch_size == 0) throw config_error("batch size must be positive");
    const std::size_t n = images.dim(0);
    std::vector<int> out;
    out.reserve(n);
    for (std::size_t at = 0; at < n; at += batch_size) {
        const std::size_t take = std::min(batch_size, n - at);
        Tensor chunk = slice(images, 0, at, take);
        const Tensor logits = net.forward(chunk, false);
        const Tensor am = argmax(logits, 1);
        for (std::size_t i = 0; i < take; ++i) out.push_back(static_cast<int>(am.data()[i]));
    }
    return out;
}

GradCheckReport gradcheck(Network& net, Tensor x, const std::vector<int>& labels, double h,
                          double tolerance, std::uint64_t jitter_seed, double margin) {
    // sample dropout masks once, then keep them fixed for every probe
    net.forward(x, true);
    net.freeze_dropout(true);

    // Nudge input and parameters until no pre-activation sits near a
    // relu/max switching surface; zero biases behind a fully-dropped unit
    // land exactly on the relu kink, so parameters must move too.
    Rng jitter(jitter_seed);
    for (std::size_t attempt = 0; attempt < 64; ++attempt) {
        net.forward(x, true);
        if (net.kink_margin() >= margin) break;
        for (std::size_t i = 0; i < x.size(); ++i) {
            x.data()[i] += jitter.uniform(-0.01, 0.01);
        }
        for (ParamGroup* g : net.param_groups()) {
            for (std::size_t i = 0; i < g->value.size(); ++i) {
                g->value.data()[i] += jitter.uniform(-0.01, 0.01);
            }
        }
    }

    const auto loss_of = [&]() {
        return cross_entropy(softmax(net.forward(x, true)), labels).loss;
    };

    const Tensor logits = net.forward(x, true);
    const Tensor dx = net.backward(softmax_xent_backward(logits, labels));

    GradCheckReport report;
    report.pass = true;
    const auto check_tensor = [&](const std::string& name, double* value, const double* analytic,
                                  std::size_t size) {
        GradCheckEntry entry;
        entry.tensor = name;
        for (std::size_t j = 0; j < size; ++j) {
            const double keep = value[j];
            value[j] = keep + h;
            const double lp = loss_of();
            value[j] = keep - h;
            const double lm = loss_of();
            value[j] = keep;
            const double num = (lp - lm) / (2.0 * h);
            const double a = analytic[j];
            const double rel =
                std::abs(a - num) / std::max({std::abs(a), std::abs(num), 1e-6});
            if (rel > entry.max_rel_err) entry.max_rel_err = rel;
        }
        entry.pass = entry.max_rel_err < tolerance;
        report.pass = report.pass && entry.pass;
        if (entry.max_rel_err >= report.worst) {
            report.worst = entry.max_rel_err;
            report.worst_tensor = entry.tensor;
        }
        report.entries.push_back(entry);
    };

    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        for (ParamGroup* g : net.layer(i).param_groups()) {
            check_tensor("layer" + std::to_string(i) + "/" + g->name, g->value.data(),
                         g->grad.data(), g->value.size());
        }
    }
    check_tensor("input", x.data(), dx.data(), x.size());

    net.freeze_dropout(false);
    return report;
}

} // namespace convnet
