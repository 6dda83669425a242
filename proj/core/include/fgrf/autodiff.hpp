#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fgrf/tensor.hpp"

namespace fgrf::ad {

enum class OpKind {
  Leaf,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Matmul,
  Exp,
  Log,
  Softplus,
  Sigmoid,
  Tanh,
  Relu,
  LeakyRelu,
  Sum,
  Mean,
  Broadcast,
  Concat,
  Slice,
  Power,
  Sqrt,
  Cumsum,
  GatherRows,
  Conv2d,
  Reshape,
};

const char* op_name(OpKind k);

/// A named learnable tensor. Lives outside the per-step graph; leaves created
/// with param() accumulate into `grad` on backward().
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
    grad = Tensor::zeros(value.shape);
  }
  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  int64_t id = 0;
  OpKind kind = OpKind::Leaf;
  Tensor value;
  Tensor grad;  // allocated lazily during backward
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;
  Parameter* bound = nullptr;
};

/// Reverse-topologically ordered view of the nodes reachable from an output.
using Graph = std::vector<Node*>;

/// Nodes reachable from `out`, sorted by creation order (a topological order
/// for a define-by-run graph).
Graph collect_graph(const Var& out);

// --- graph construction -----------------------------------------------------

Var constant(Tensor v);
Var leaf(Tensor v, bool requires_grad);
Var param(Parameter& p);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var neg(const Var& a);
Var add_scalar(const Var& a, double c);
Var mul_scalar(const Var& a, double c);

Var matmul(const Var& a, const Var& b);  // [m,k] x [k,n]

Var exp_(const Var& a);
Var log_(const Var& a);
Var softplus(const Var& a);
Var sigmoid(const Var& a);
Var tanh_(const Var& a);
Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope = 0.2);
Var sqrt_(const Var& a);
Var pow_(const Var& a, double exponent);

Var sum_all(const Var& a);                             // -> [1]
Var sum_axis(const Var& a, int axis, bool keepdim);    // reduce one axis
Var mean_all(const Var& a);                            // -> [1]
Var mean_axis(const Var& a, int axis, bool keepdim);

Var broadcast_to(const Var& a, const std::vector<int64_t>& shape);
Var concat(const std::vector<Var>& parts, int axis);
Var slice(const Var& a, int axis, int64_t start, int64_t len);
Var reshape(const Var& a, std::vector<int64_t> shape);

/// Exclusive cumulative sum along the last axis.
Var cumsum_exclusive(const Var& a);

/// table [T,F], indices length P -> [P,F]; backward scatter-adds into table.
Var gather_rows(const Var& table, std::vector<int64_t> indices);

/// x [B,Cin,H,W], w [Cout,Cin,kh,kw], bias [Cout]; zero padding.
Var conv2d(const Var& x, const Var& w, const Var& bias, int stride, int pad);

// --- backward ---------------------------------------------------------------

/// Accumulates d(out)/d(leaf) into every requires_grad leaf reachable from
/// `out` (sum semantics on tensor reuse) and into bound Parameters' grads.
void backward(const Var& out);

// --- gradient checking ------------------------------------------------------

struct GradCheckResult {
  double max_rel_error = 0.0;
  /// Set when a relu/leaky_relu input hit a kink (coordinate exactly 0).
  bool kink_warning = false;
};

/// Central finite differences of fn against the analytic gradient at `point`.
GradCheckResult grad_check(const std::function<Var(const Var&)>& fn, const Tensor& point,
                           double eps = 1e-4);

// --- optimizer --------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig cfg);

  /// One bias-corrected update from the parameters' accumulated grads.
  /// Throws (naming the parameter, leaving all parameters untouched) if any
  /// grad is non-finite.
  void step();
  void zero_grad();
  int64_t step_count() const { return t_; }
  const std::vector<Parameter*>& params() const { return params_; }
  AdamConfig& config() { return cfg_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> m_, v_;
  int64_t t_ = 0;
  AdamConfig cfg_;
};

// --- small numeric helpers --------------------------------------------------

bool all_finite(const Tensor& t);

}  // namespace fgrf::ad
