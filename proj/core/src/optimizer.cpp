#include <cmath>

#include "convnet/errors.hpp"
#include "convnet/optimizer.hpp"

namespace convnet {

double lr_at(const TrainSchedule& s, std::size_t epoch) {
    const double floor = s.base_lr * s.lr_floor_factor;
    if (s.lr_saturate_epoch == 0 || epoch >= s.lr_saturate_epoch) return floor;
    const double t = static_cast<double>(epoch) / static_cast<double>(s.lr_saturate_epoch);
    return s.base_lr + (floor - s.base_lr) * t;
}

double momentum_at(const TrainSchedule& s, std::size_t epoch) {
    if (s.momentum_saturate_epoch == 0 || epoch >= s.momentum_saturate_epoch) {
        return s.momentum_end;
    }
    const double t =
        static_cast<double>(epoch) / static_cast<double>(s.momentum_saturate_epoch);
    return s.momentum_start + (s.momentum_end - s.momentum_start) * t;
}

Optimizer::Optimizer(std::vector<ParamGroup*> groups, TrainSchedule schedule)
    : groups_(std::move(groups)), schedule_(schedule) {
    velocity_.reserve(groups_.size());
    for (ParamGroup* g : groups_) velocity_.emplace_back(g->value.shape());
}

void Optimizer::step(std::size_t epoch, const std::function<void()>& grad_fn) {
    const double lr = lr_at(schedule_, epoch);
    const double mu = momentum_at(schedule_, epoch);
    const bool lookahead = schedule_.momentum_kind == TrainSchedule::Momentum::nesterov && mu != 0.0;

    if (lookahead) {
        for (std::size_t i = 0; i < groups_.size(); ++i) {
            axpy(mu, velocity_[i], groups_[i]->value);
        }
    }
    grad_fn();
    if (lookahead) {
        for (std::size_t i = 0; i < groups_.size(); ++i) {
            axpy(-mu, velocity_[i], groups_[i]->value);
        }
    }

    for (std::size_t i = 0; i < groups_.size(); ++i) {
        ParamGroup* g = groups_[i];
        if (g->grad.shape() != g->value.shape()) {
            throw shape_error("optimizer: gradient " + g->grad.shape_str() + " for " + g->name +
                              " " + g->value.shape_str());
        }
        const double eps = g->is_conv ? lr * schedule_.conv_grad_scale : lr;
        scale_inplace(velocity_[i], mu);
        axpy(-eps, g->grad, velocity_[i]);
        axpy(1.0, velocity_[i], g->value);
    }
    project_maxnorm();
}

void Optimizer::project_maxnorm() {
    for (ParamGroup* g : groups_) {
        if (g->norm_cap <= 0.0 || g->grouping == ParamGroup::Grouping::none) continue;
        double* p = g->value.data();
        const double cap = g->norm_cap;
        if (g->grouping == ParamGroup::Grouping::conv_kernel) {
            const std::size_t rows = g->value.dim(0);
            const std::size_t len = g->value.size() / rows;
            for (std::size_t i = 0; i < rows; ++i) {
                double* row = p + i * len;
                double sq = 0.0;
                for (std::size_t j = 0; j < len; ++j) sq += row[j] * row[j];
                const double norm = std::sqrt(sq);
                if (norm > cap) {
                    const double f = cap / norm;
                    for (std::size_t j = 0; j < len; ++j) row[j] *= f;
                }
            }
        } else {  // dense_column: [in, out], constrain each unit's incoming column
            const std::size_t in = g->value.dim(0), out = g->value.dim(1);
            for (std::size_t j = 0; j < out; ++j) {
                double sq = 0.0;
                for (std::size_t i = 0; i < in; ++i) sq += p[i * out + j] * p[i * out + j];
                const double norm = std::sqrt(sq);
                if (norm > cap) {
                    const double f = cap / norm;
                    for (std::size_t i = 0; i < in; ++i) p[i * out + j] *= f;
                }
            }
        }
    }
}

} // namespace convnet
