#include "fgrf/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_set>

namespace fgrf::ad {

namespace {

int64_t next_id() {
  static int64_t counter = 0;
  return ++counter;
}

Var make_node(OpKind kind, Tensor value, std::vector<Var> parents,
              std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->id = next_id();
  n->kind = kind;
  n->value = std::move(value);
  n->parents = std::move(parents);
  n->backward_fn = std::move(backward_fn);
  for (const auto& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  return n;
}

void ensure_grad(Node& n) {
  if (n.grad.data.empty()) n.grad = Tensor::zeros(n.value.shape);
}

void accum(Node& n, const Tensor& g) {
  if (!n.requires_grad) return;
  ensure_grad(n);
  if (g.shape != n.grad.shape)
    throw std::logic_error("autodiff internal: gradient shape " + g.shape_str() +
                           " vs value shape " + n.grad.shape_str());
  const size_t sz = g.data.size();
  for (size_t i = 0; i < sz; ++i) n.grad.data[i] += g.data[i];
}

[[noreturn]] void shape_error(OpKind k, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op_name(k)) + ": incompatible shapes " + a.shape_str() +
                              " and " + b.shape_str());
}

// numpy-style broadcast of two shapes
std::vector<int64_t> broadcast_shape(OpKind k, const Tensor& a, const Tensor& b) {
  const auto& sa = a.shape;
  const auto& sb = b.shape;
  size_t r = std::max(sa.size(), sb.size());
  std::vector<int64_t> out(r);
  for (size_t i = 0; i < r; ++i) {
    int64_t ea = i < sa.size() ? sa[sa.size() - 1 - i] : 1;
    int64_t eb = i < sb.size() ? sb[sb.size() - 1 - i] : 1;
    if (ea != eb && ea != 1 && eb != 1) shape_error(k, a, b);
    out[r - 1 - i] = std::max(ea, eb);
  }
  return out;
}

std::vector<int64_t> strides_for(const std::vector<int64_t>& shape) {
  std::vector<int64_t> st(shape.size());
  int64_t acc = 1;
  for (size_t i = shape.size(); i-- > 0;) {
    st[i] = acc;
    acc *= shape[i];
  }
  return st;
}

// strides of `in` viewed under broadcast to `out_shape` (0 where broadcast)
std::vector<int64_t> broadcast_strides(const std::vector<int64_t>& in_shape,
                                       const std::vector<int64_t>& out_shape) {
  auto in_st = strides_for(in_shape);
  std::vector<int64_t> st(out_shape.size(), 0);
  size_t off = out_shape.size() - in_shape.size();
  for (size_t i = 0; i < in_shape.size(); ++i)
    st[off + i] = (in_shape[i] == 1 && out_shape[off + i] != 1) ? 0 : in_st[i];
  return st;
}

template <class F>
Tensor elementwise_broadcast(OpKind k, const Tensor& a, const Tensor& b, F f) {
  if (a.shape == b.shape) {
    Tensor out = Tensor::zeros(a.shape);
    const size_t n = a.data.size();
    for (size_t i = 0; i < n; ++i) out.data[i] = f(a.data[i], b.data[i]);
    return out;
  }
  auto os = broadcast_shape(k, a, b);
  Tensor out = Tensor::zeros(os);
  auto sa = broadcast_strides(a.shape, os);
  auto sb = broadcast_strides(b.shape, os);
  const int r = static_cast<int>(os.size());
  std::vector<int64_t> idx(r, 0);
  const int64_t n = out.numel();
  int64_t ia = 0, ib = 0;
  for (int64_t i = 0; i < n; ++i) {
    out.data[static_cast<size_t>(i)] = f(a.data[static_cast<size_t>(ia)], b.data[static_cast<size_t>(ib)]);
    for (int d = r - 1; d >= 0; --d) {
      if (++idx[d] < os[d]) {
        ia += sa[d];
        ib += sb[d];
        break;
      }
      idx[d] = 0;
      ia -= sa[d] * (os[d] - 1);
      ib -= sb[d] * (os[d] - 1);
    }
  }
  return out;
}

// sum g down to `target` shape (inverse of broadcast)
Tensor reduce_to_shape(const Tensor& g, const std::vector<int64_t>& target) {
  if (g.shape == target) return g;
  Tensor out = Tensor::zeros(target);
  auto st = broadcast_strides(target, g.shape);
  const int r = static_cast<int>(g.shape.size());
  std::vector<int64_t> idx(r, 0);
  const int64_t n = g.numel();
  int64_t it = 0;
  for (int64_t i = 0; i < n; ++i) {
    out.data[static_cast<size_t>(it)] += g.data[static_cast<size_t>(i)];
    for (int d = r - 1; d >= 0; --d) {
      if (++idx[d] < g.shape[d]) {
        it += st[d];
        break;
      }
      idx[d] = 0;
      it -= st[d] * (g.shape[d] - 1);
    }
  }
  return out;
}

Var binary_op(OpKind k, const Var& a, const Var& b, double (*fwd)(double, double),
              std::function<void(Node&)> bw) {
  Tensor v = elementwise_broadcast(k, a->value, b->value, fwd);
  return make_node(k, std::move(v), {a, b}, std::move(bw));
}

template <class Fwd, class Dfn>
Var unary_op(OpKind k, const Var& a, Fwd fwd, Dfn dval) {
  Tensor v = Tensor::zeros(a->value.shape);
  const size_t n = v.data.size();
  for (size_t i = 0; i < n; ++i) v.data[i] = fwd(a->value.data[i]);
  return make_node(k, std::move(v), {a}, [dval](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    ensure_grad(p);
    const size_t n = self.grad.data.size();
    for (size_t i = 0; i < n; ++i)
      p.grad.data[i] += self.grad.data[i] * dval(p.value.data[i], self.value.data[i]);
  });
}

double softplus_scalar(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0);
}

double sigmoid_scalar(double x) {
  if (x >= 0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::Leaf: return "leaf";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Div: return "div";
    case OpKind::Neg: return "neg";
    case OpKind::Matmul: return "matmul";
    case OpKind::Exp: return "exp";
    case OpKind::Log: return "log";
    case OpKind::Softplus: return "softplus";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Tanh: return "tanh";
    case OpKind::Relu: return "relu";
    case OpKind::LeakyRelu: return "leaky_relu";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::Broadcast: return "broadcast";
    case OpKind::Concat: return "concat";
    case OpKind::Slice: return "slice";
    case OpKind::Power: return "power";
    case OpKind::Sqrt: return "sqrt";
    case OpKind::Cumsum: return "cumsum";
    case OpKind::GatherRows: return "gather_rows";
    case OpKind::Conv2d: return "conv2d";
    case OpKind::Reshape: return "reshape";
  }
  return "?";
}

Graph collect_graph(const Var& out) {
  Graph g;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{out.get()};
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    g.push_back(n);
    for (const auto& p : n->parents) stack.push_back(p.get());
  }
  std::sort(g.begin(), g.end(), [](Node* a, Node* b) { return a->id < b->id; });
  return g;
}

Var constant(Tensor v) { return leaf(std::move(v), false); }

Var leaf(Tensor v, bool requires_grad) {
  auto n = make_node(OpKind::Leaf, std::move(v), {}, nullptr);
  n->requires_grad = requires_grad;
  return n;
}

Var param(Parameter& p) {
  auto n = leaf(p.value, true);
  n->bound = &p;
  return n;
}

Var add(const Var& a, const Var& b) {
  return binary_op(OpKind::Add, a, b, [](double x, double y) { return x + y; }, [](Node& self) {
    accum(*self.parents[0], reduce_to_shape(self.grad, self.parents[0]->value.shape));
    accum(*self.parents[1], reduce_to_shape(self.grad, self.parents[1]->value.shape));
  });
}

Var sub(const Var& a, const Var& b) {
  return binary_op(OpKind::Sub, a, b, [](double x, double y) { return x - y; }, [](Node& self) {
    accum(*self.parents[0], reduce_to_shape(self.grad, self.parents[0]->value.shape));
    Tensor ng = self.grad;
    for (auto& v : ng.data) v = -v;
    accum(*self.parents[1], reduce_to_shape(ng, self.parents[1]->value.shape));
  });
}

Var mul(const Var& a, const Var& b) {
  return binary_op(OpKind::Mul, a, b, [](double x, double y) { return x * y; }, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      Tensor ga = elementwise_broadcast(OpKind::Mul, self.grad, pb.value,
                                        [](double g, double y) { return g * y; });
      accum(pa, reduce_to_shape(ga, pa.value.shape));
    }
    if (pb.requires_grad) {
      Tensor gb = elementwise_broadcast(OpKind::Mul, self.grad, pa.value,
                                        [](double g, double x) { return g * x; });
      accum(pb, reduce_to_shape(gb, pb.value.shape));
    }
  });
}

Var div(const Var& a, const Var& b) {
  return binary_op(OpKind::Div, a, b, [](double x, double y) { return x / y; }, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      Tensor ga = elementwise_broadcast(OpKind::Div, self.grad, pb.value,
                                        [](double g, double y) { return g / y; });
      accum(pa, reduce_to_shape(ga, pa.value.shape));
    }
    if (pb.requires_grad) {
      Tensor q = elementwise_broadcast(OpKind::Div, self.value, pb.value,
                                       [](double v, double y) { return -v / y; });
      Tensor gb = elementwise_broadcast(OpKind::Mul, self.grad, q,
                                        [](double g, double z) { return g * z; });
      accum(pb, reduce_to_shape(gb, pb.value.shape));
    }
  });
}

Var neg(const Var& a) {
  return unary_op(OpKind::Neg, a, [](double x) { return -x; },
                  [](double, double) { return -1.0; });
}

Var add_scalar(const Var& a, double c) { return add(a, constant(Tensor::scalar(c))); }
Var mul_scalar(const Var& a, double c) { return mul(a, constant(Tensor::scalar(c))); }

Var matmul(const Var& a, const Var& b) {
  const Tensor& A = a->value;
  const Tensor& B = b->value;
  if (A.rank() != 2 || B.rank() != 2 || A.shape[1] != B.shape[0]) shape_error(OpKind::Matmul, A, B);
  const int64_t m = A.shape[0], k = A.shape[1], n = B.shape[1];
  Tensor out = Tensor::zeros({m, n});
  for (int64_t i = 0; i < m; ++i)
    for (int64_t kk = 0; kk < k; ++kk) {
      const double av = A.data[static_cast<size_t>(i * k + kk)];
      if (av == 0.0) continue;
      const double* brow = &B.data[static_cast<size_t>(kk * n)];
      double* orow = &out.data[static_cast<size_t>(i * n)];
      for (int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  return make_node(OpKind::Matmul, std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const Tensor& G = self.grad;
    if (pa.requires_grad) {
      ensure_grad(pa);  // dA = G * B^T
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) {
          const double g = G.data[static_cast<size_t>(i * n + j)];
          if (g == 0.0) continue;
          for (int64_t kk = 0; kk < k; ++kk)
            pa.grad.data[static_cast<size_t>(i * k + kk)] +=
                g * pb.value.data[static_cast<size_t>(kk * n + j)];
        }
    }
    if (pb.requires_grad) {
      ensure_grad(pb);  // dB = A^T * G
      for (int64_t i = 0; i < m; ++i)
        for (int64_t kk = 0; kk < k; ++kk) {
          const double av = pa.value.data[static_cast<size_t>(i * k + kk)];
          if (av == 0.0) continue;
          const double* grow = &G.data[static_cast<size_t>(i * n)];
          double* brow = &pb.grad.data[static_cast<size_t>(kk * n)];
          for (int64_t j = 0; j < n; ++j) brow[j] += av * grow[j];
        }
    }
  });
}

Var exp_(const Var& a) {
  return unary_op(OpKind::Exp, a, [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Var log_(const Var& a) {
  return unary_op(OpKind::Log, a, [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Var softplus(const Var& a) {
  return unary_op(OpKind::Softplus, a, softplus_scalar,
                  [](double x, double) { return sigmoid_scalar(x); });
}

Var sigmoid(const Var& a) {
  return unary_op(OpKind::Sigmoid, a, sigmoid_scalar,
                  [](double, double y) { return y * (1.0 - y); });
}

Var tanh_(const Var& a) {
  return unary_op(OpKind::Tanh, a, [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

Var relu(const Var& a) {
  return unary_op(OpKind::Relu, a, [](double x) { return x > 0 ? x : 0.0; },
                  [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& a, double slope) {
  return unary_op(OpKind::LeakyRelu, a, [slope](double x) { return x > 0 ? x : slope * x; },
                  [slope](double x, double) { return x > 0 ? 1.0 : slope; });
}

Var sqrt_(const Var& a) {
  return unary_op(OpKind::Sqrt, a, [](double x) { return std::sqrt(x); },
                  [](double, double y) { return 0.5 / y; });
}

Var pow_(const Var& a, double e) {
  return unary_op(OpKind::Power, a, [e](double x) { return std::pow(x, e); },
                  [e](double x, double) { return e * std::pow(x, e - 1.0); });
}

Var sum_all(const Var& a) {
  double s = 0.0;
  for (double v : a->value.data) s += v;
  return make_node(OpKind::Sum, Tensor::scalar(s), {a}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    ensure_grad(p);
    const double g = self.grad.data[0];
    for (auto& v : p.grad.data) v += g;
  });
}

namespace {
void check_axis(OpKind k, const Tensor& t, int axis) {
  if (axis < 0 || axis >= t.rank())
    throw std::invalid_argument(std::string(op_name(k)) + ": axis " + std::to_string(axis) +
                                " out of range for shape " + t.shape_str());
}
}  // namespace

Var sum_axis(const Var& a, int axis, bool keepdim) {
  const Tensor& A = a->value;
  check_axis(OpKind::Sum, A, axis);
  int64_t outer = 1, n = A.shape[axis], inner = 1;
  for (int i = 0; i < axis; ++i) outer *= A.shape[i];
  for (int i = axis + 1; i < A.rank(); ++i) inner *= A.shape[i];
  std::vector<int64_t> os;
  for (int i = 0; i < A.rank(); ++i) {
    if (i == axis) {
      if (keepdim) os.push_back(1);
    } else {
      os.push_back(A.shape[i]);
    }
  }
  if (os.empty()) os.push_back(1);
  Tensor out = Tensor::zeros(os);
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t j = 0; j < n; ++j)
      for (int64_t in = 0; in < inner; ++in)
        out.data[static_cast<size_t>(o * inner + in)] +=
            A.data[static_cast<size_t>((o * n + j) * inner + in)];
  return make_node(OpKind::Sum, std::move(out), {a}, [outer, n, inner](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    ensure_grad(p);
    for (int64_t o = 0; o < outer; ++o)
      for (int64_t j = 0; j < n; ++j)
        for (int64_t in = 0; in < inner; ++in)
          p.grad.data[static_cast<size_t>((o * n + j) * inner + in)] +=
              self.grad.data[static_cast<size_t>(o * inner + in)];
  });
}

Var mean_all(const Var& a) { return mul_scalar(sum_all(a), 1.0 / static_cast<double>(a->value.numel())); }

Var mean_axis(const Var& a, int axis, bool keepdim) {
  check_axis(OpKind::Mean, a->value, axis);
  return mul_scalar(sum_axis(a, axis, keepdim), 1.0 / static_cast<double>(a->value.shape[axis]));
}

Var broadcast_to(const Var& a, const std::vector<int64_t>& shape) {
  Tensor ones = Tensor::full(shape, 0.0);
  Tensor v = elementwise_broadcast(OpKind::Broadcast, a->value, ones,
                                   [](double x, double) { return x; });
  return make_node(OpKind::Broadcast, std::move(v), {a}, [](Node& self) {
    accum(*self.parents[0], reduce_to_shape(self.grad, self.parents[0]->value.shape));
  });
}

Var concat(const std::vector<Var>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const Tensor& first = parts[0]->value;
  check_axis(OpKind::Concat, first, axis);
  int64_t total = 0;
  for (const auto& p : parts) {
    const Tensor& t = p->value;
    if (t.rank() != first.rank()) shape_error(OpKind::Concat, first, t);
    for (int i = 0; i < t.rank(); ++i)
      if (i != axis && t.shape[i] != first.shape[i]) shape_error(OpKind::Concat, first, t);
    total += t.shape[axis];
  }
  std::vector<int64_t> os = first.shape;
  os[axis] = total;
  Tensor out = Tensor::zeros(os);
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= os[i];
  for (int i = axis + 1; i < first.rank(); ++i) inner *= os[i];
  int64_t off = 0;
  for (const auto& p : parts) {
    const int64_t n = p->value.shape[axis];
    for (int64_t o = 0; o < outer; ++o)
      std::memcpy(&out.data[static_cast<size_t>((o * total + off) * inner)],
                  &p->value.data[static_cast<size_t>(o * n * inner)],
                  static_cast<size_t>(n * inner) * sizeof(double));
    off += n;
  }
  return make_node(OpKind::Concat, std::move(out), parts, [outer, inner, total](Node& self) {
    int64_t off = 0;
    for (auto& pv : self.parents) {
      Node& p = *pv;
      const int64_t cnt = p.value.numel() / (outer * inner);  // axis extent
      if (p.requires_grad) {
        ensure_grad(p);
        for (int64_t o = 0; o < outer; ++o)
          for (int64_t j = 0; j < cnt * inner; ++j)
            p.grad.data[static_cast<size_t>(o * cnt * inner + j)] +=
                self.grad.data[static_cast<size_t>((o * total + off) * inner + j)];
      }
      off += cnt;
    }
  });
}

Var slice(const Var& a, int axis, int64_t start, int64_t len) {
  const Tensor& A = a->value;
  check_axis(OpKind::Slice, A, axis);
  if (start < 0 || len <= 0 || start + len > A.shape[axis])
    throw std::invalid_argument("slice: range [" + std::to_string(start) + "," +
                                std::to_string(start + len) + ") out of bounds for shape " +
                                A.shape_str());
  int64_t outer = 1, n = A.shape[axis], inner = 1;
  for (int i = 0; i < axis; ++i) outer *= A.shape[i];
  for (int i = axis + 1; i < A.rank(); ++i) inner *= A.shape[i];
  std::vector<int64_t> os = A.shape;
  os[axis] = len;
  Tensor out = Tensor::zeros(os);
  for (int64_t o = 0; o < outer; ++o)
    std::memcpy(&out.data[static_cast<size_t>(o * len * inner)],
                &A.data[static_cast<size_t>((o * n + start) * inner)],
                static_cast<size_t>(len * inner) * sizeof(double));
  return make_node(OpKind::Slice, std::move(out), {a}, [outer, n, inner, start, len](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    ensure_grad(p);
    for (int64_t o = 0; o < outer; ++o)
      for (int64_t j = 0; j < len * inner; ++j)
        p.grad.data[static_cast<size_t>((o * n + start) * inner + j)] +=
            self.grad.data[static_cast<size_t>(o * len * inner + j)];
  });
}

Var reshape(const Var& a, std::vector<int64_t> shape) {
  if (Tensor::numel_of(shape) != a->value.numel())
    throw std::invalid_argument("reshape: cannot view " + a->value.shape_str() + " as " +
                                Tensor::shape_str(shape));
  Tensor out(shape, a->value.data);
  return make_node(OpKind::Reshape, std::move(out), {a}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    ensure_grad(p);
    const size_t n = self.grad.data.size();
    for (size_t i = 0; i < n; ++i) p.grad.data[i] += self.grad.data[i];
  });
}

Var cumsum_exclusive(const Var& a) {
  const Tensor& A = a->value;
  const int64_t n = A.shape.back();
  const int64_t rows = A.numel() / n;
  Tensor out = Tensor::zeros(A.shape);
  for (int64_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (int64_t j = 0; j < n; ++j) {
      out.data[static_cast<size_t>(r * n + j)] = acc;
      acc += A.data[static_cast<size_t>(r * n + j)];
    }
  }
  return make_node(OpKind::Cumsum, std::move(out), {a}, [rows, n](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    ensure_grad(p);
    // dL/dx_j = sum_{i > j} g_i
    for (int64_t r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (int64_t j = n - 1; j >= 0; --j) {
        acc += self.grad.data[static_cast<size_t>(r * n + j)];
        p.grad.data[static_cast<size_t>(r * n + j)] +=
            acc - self.grad.data[static_cast<size_t>(r * n + j)];
      }
    }
  });
}

Var gather_rows(const Var& table, std::vector<int64_t> indices) {
  const Tensor& T = table->value;
  if (T.rank() != 2) throw std::invalid_argument("gather_rows: table must be 2-D, got " + T.shape_str());
  const int64_t rows = T.shape[0], f = T.shape[1];
  const int64_t p = static_cast<int64_t>(indices.size());
  Tensor out = Tensor::zeros({p, f});
  for (int64_t i = 0; i < p; ++i) {
    int64_t r = indices[static_cast<size_t>(i)];
    if (r < 0 || r >= rows)
      throw std::invalid_argument("gather_rows: index " + std::to_string(r) + " out of range [0," +
                                  std::to_string(rows) + ")");
    std::memcpy(&out.data[static_cast<size_t>(i * f)], &T.data[static_cast<size_t>(r * f)],
                static_cast<size_t>(f) * sizeof(double));
  }
  return make_node(OpKind::GatherRows, std::move(out), {table},
                   [idx = std::move(indices), f](Node& self) {
                     Node& p = *self.parents[0];
                     if (!p.requires_grad) return;
                     ensure_grad(p);
                     for (size_t i = 0; i < idx.size(); ++i)
                       for (int64_t j = 0; j < f; ++j)
                         p.grad.data[static_cast<size_t>(idx[i] * f + j)] +=
                             self.grad.data[i * static_cast<size_t>(f) + static_cast<size_t>(j)];
                   });
}

Var conv2d(const Var& x, const Var& w, const Var& bias, int stride, int pad) {
  const Tensor& X = x->value;
  const Tensor& W = w->value;
  const Tensor& Bt = bias->value;
  if (X.rank() != 4 || W.rank() != 4 || X.shape[1] != W.shape[1]) shape_error(OpKind::Conv2d, X, W);
  if (Bt.rank() != 1 || Bt.shape[0] != W.shape[0]) shape_error(OpKind::Conv2d, W, Bt);
  const int64_t B = X.shape[0], Cin = X.shape[1], H = X.shape[2], Wd = X.shape[3];
  const int64_t Cout = W.shape[0], kh = W.shape[2], kw = W.shape[3];
  const int64_t Ho = (H + 2 * pad - kh) / stride + 1;
  const int64_t Wo = (Wd + 2 * pad - kw) / stride + 1;
  if (Ho <= 0 || Wo <= 0)
    throw std::invalid_argument("conv2d: kernel larger than padded input, shapes " + X.shape_str() +
                                " and " + W.shape_str());
  Tensor out = Tensor::zeros({B, Cout, Ho, Wo});
  auto xat = [&](int64_t b, int64_t c, int64_t i, int64_t j) -> double {
    if (i < 0 || i >= H || j < 0 || j >= Wd) return 0.0;
    return X.data[static_cast<size_t>(((b * Cin + c) * H + i) * Wd + j)];
  };
  for (int64_t b = 0; b < B; ++b)
    for (int64_t co = 0; co < Cout; ++co)
      for (int64_t oi = 0; oi < Ho; ++oi)
        for (int64_t oj = 0; oj < Wo; ++oj) {
          double acc = Bt.data[static_cast<size_t>(co)];
          for (int64_t ci = 0; ci < Cin; ++ci)
            for (int64_t u = 0; u < kh; ++u)
              for (int64_t v = 0; v < kw; ++v)
                acc += W.data[static_cast<size_t>(((co * Cin + ci) * kh + u) * kw + v)] *
                       xat(b, ci, oi * stride + u - pad, oj * stride + v - pad);
          out.data[static_cast<size_t>(((b * Cout + co) * Ho + oi) * Wo + oj)] = acc;
        }
  return make_node(
      OpKind::Conv2d, std::move(out), {x, w, bias},
      [B, Cin, H, Wd, Cout, kh, kw, Ho, Wo, stride, pad](Node& self) {
        Node& px = *self.parents[0];
        Node& pw = *self.parents[1];
        Node& pb = *self.parents[2];
        const Tensor& G = self.grad;
        if (px.requires_grad) ensure_grad(px);
        if (pw.requires_grad) ensure_grad(pw);
        if (pb.requires_grad) ensure_grad(pb);
        for (int64_t b = 0; b < B; ++b)
          for (int64_t co = 0; co < Cout; ++co)
            for (int64_t oi = 0; oi < Ho; ++oi)
              for (int64_t oj = 0; oj < Wo; ++oj) {
                const double g = G.data[static_cast<size_t>(((b * Cout + co) * Ho + oi) * Wo + oj)];
                if (g == 0.0) continue;
                if (pb.requires_grad) pb.grad.data[static_cast<size_t>(co)] += g;
                for (int64_t ci = 0; ci < Cin; ++ci)
                  for (int64_t u = 0; u < kh; ++u)
                    for (int64_t v = 0; v < kw; ++v) {
                      const int64_t i = oi * stride + u - pad;
                      const int64_t j = oj * stride + v - pad;
                      if (i < 0 || i >= H || j < 0 || j >= Wd) continue;
                      const size_t xi = static_cast<size_t>(((b * Cin + ci) * H + i) * Wd + j);
                      const size_t wi = static_cast<size_t>(((co * Cin + ci) * kh + u) * kw + v);
                      if (pw.requires_grad) pw.grad.data[wi] += g * px.value.data[xi];
                      if (px.requires_grad) px.grad.data[xi] += g * pw.value.data[wi];
                    }
              }
      });
}

void backward(const Var& out) {
  if (out->value.numel() != 1)
    throw std::invalid_argument("backward: output must be scalar, got shape " +
                                out->value.shape_str());
  Graph g = collect_graph(out);
  for (Node* n : g) n->grad = Tensor();
  out->grad = Tensor::full(out->value.shape, 1.0);
  for (auto it = g.rbegin(); it != g.rend(); ++it) {
    Node* n = *it;
    if (!n->requires_grad || n->grad.data.empty()) continue;
    if (n->backward_fn) n->backward_fn(*n);
    if (n->bound) {
      const size_t sz = n->grad.data.size();
      for (size_t i = 0; i < sz; ++i) n->bound->grad.data[i] += n->grad.data[i];
    }
  }
}

GradCheckResult grad_check(const std::function<Var(const Var&)>& fn, const Tensor& point,
                           double eps) {
  if (eps <= 0) throw std::invalid_argument("grad_check: eps must be positive");
  GradCheckResult res;

  auto eval = [&](const Tensor& p, bool with_grad, Tensor* grad_out) {
    Var x = leaf(p, with_grad);
    Var y = fn(x);
    if (y->value.numel() != 1) throw std::invalid_argument("grad_check: fn must return a scalar");
    if (!std::isfinite(y->value.data[0]))
      throw std::runtime_error("grad_check: fn returned non-finite value");
    if (with_grad) {
      for (Node* n : collect_graph(y)) {
        if (n->kind == OpKind::Relu || n->kind == OpKind::LeakyRelu) {
          for (double v : n->parents[0]->value.data)
            if (v == 0.0) res.kink_warning = true;
        }
      }
      backward(y);
      *grad_out = x->grad.data.empty() ? Tensor::zeros(p.shape) : x->grad;
    }
    return y->value.data[0];
  };

  Tensor analytic;
  eval(point, true, &analytic);

  Tensor p = point;
  for (int64_t i = 0; i < p.numel(); ++i) {
    const double orig = p[i];
    p[i] = orig + eps;
    const double fp = eval(p, false, nullptr);
    p[i] = orig - eps;
    const double fm = eval(p, false, nullptr);
    p[i] = orig;
    const double numeric = (fp - fm) / (2.0 * eps);
    const double rel = std::abs(analytic[i] - numeric) / std::max(1e-8, std::abs(numeric));
    res.max_rel_error = std::max(res.max_rel_error, rel);
  }
  return res;
}

Adam::Adam(std::vector<Parameter*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  for (Parameter* p : params_) {
    m_.push_back(Tensor::zeros(p->value.shape));
    v_.push_back(Tensor::zeros(p->value.shape));
  }
}

void Adam::step() {
  for (Parameter* p : params_)
    if (!all_finite(p->grad))
      throw std::runtime_error("adam_step: non-finite gradient in parameter '" + p->name + "'");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    const size_t n = p.value.data.size();
    for (size_t i = 0; i < n; ++i) {
      const double g = p.grad.data[i];
      m_[k].data[i] = cfg_.beta1 * m_[k].data[i] + (1.0 - cfg_.beta1) * g;
      v_[k].data[i] = cfg_.beta2 * v_[k].data[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m_[k].data[i] / bc1;
      const double vhat = v_[k].data[i] / bc2;
      p.value.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

bool all_finite(const Tensor& t) {
  for (double v : t.data)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace fgrf::ad
