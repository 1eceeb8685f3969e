#ifndef CONVNET_OPTIMIZER_HPP
#define CONVNET_OPTIMIZER_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "convnet/layers.hpp"

namespace convnet {

// Epoch-indexed training schedule; values are constant within an epoch.
// Learning rate decays linearly from base_lr to base_lr*lr_floor_factor at
// lr_saturate_epoch and holds; momentum rises linearly from start to end at
// momentum_saturate_epoch and holds. Conv parameter groups (weights and
// biases) see lr scaled by conv_grad_scale.
struct TrainSchedule {
    enum class Momentum { classical, nesterov };

    double base_lr = 0.17;
    double lr_floor_factor = 0.01;
    std::size_t lr_saturate_epoch = 500;
    Momentum momentum_kind = Momentum::nesterov;
    double momentum_start = 0.5;
    double momentum_end = 0.6;
    std::size_t momentum_saturate_epoch = 250;
    double conv_grad_scale = 0.05;
    std::size_t batch_size = 100;
};

double lr_at(const TrainSchedule& s, std::size_t epoch);
double momentum_at(const TrainSchedule& s, std::size_t epoch);

// Momentum SGD over a fixed set of parameter groups. Velocities start at
// zero and match parameter shapes. Nesterov evaluates the gradient at the
// lookahead point theta + mu*v by shifting the live parameters, calling
// grad_fn, and shifting back; classical evaluates at theta. Every step ends
// with the max-norm projection of constrained groups.
class Optimizer {
public:
    Optimizer(std::vector<ParamGroup*> groups, TrainSchedule schedule);

    // grad_fn must fill g->grad for every group at the parameters it sees.
    void step(std::size_t epoch, const std::function<void()>& grad_fn);

    // Scales any group whose per-kernel row (conv) or per-unit column
    // (dense) L2 norm exceeds its cap back onto the cap. Unconstrained
    // groups (cap 0, biases) pass through.
    void project_maxnorm();

    const TrainSchedule& schedule() const { return schedule_; }
    std::vector<ParamGroup*>& groups() { return groups_; }
    std::vector<Tensor>& velocities() { return velocity_; }

private:
    std::vector<ParamGroup*> groups_;
    std::vector<Tensor> velocity_;
    TrainSchedule schedule_;
};

} // namespace convnet

#endif
