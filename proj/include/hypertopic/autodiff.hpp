#pragma once

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. A Tape records one forward pass; each node owns its value and a
// closure that pushes the node's gradient into its inputs. Parameters are
// long-lived and accumulate gradients across backward passes until
// zero_grad().

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace hypertopic::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

// Insertion-ordered named parameters. References stay valid across add().
class ParameterStore {
public:
    Parameter& add(std::string name, Matrix init);
    Parameter& at(std::string_view name);
    const Parameter& at(std::string_view name) const;
    bool contains(std::string_view name) const;

    std::deque<Parameter>& all() { return params_; }
    const std::deque<Parameter>& all() const { return params_; }

    void zero_grad();
    std::size_t scalar_count() const;

private:
    std::deque<Parameter> params_;
};

class Tape;

class Var {
public:
    Var() = default;

    const Matrix& value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    double scalar() const { return value()(0, 0); }
    Tape* tape() const { return tape_; }
    int id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, int id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    int id_ = -1;
};

class Tape {
public:
    // Receives the gradient of the node being processed.
    using Backward = std::function<void(Tape&, const Matrix&)>;

    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix value);
    Var parameter(Parameter& p);

    // Records a derived node. `backward` is dropped when no input needs grad.
    Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);
    Var record(Matrix value, const std::vector<Var>& inputs, Backward backward);

    // Seeds d(root)/d(root) = 1 (root must be 1x1) and runs the reverse sweep,
    // accumulating into Parameter::grad.
    void backward(Var root);

    const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
    bool grad_enabled() const { return grad_enabled_; }
    std::size_t size() const { return nodes_.size(); }

    template <typename Derived>
    void accumulate(int id, const Eigen::MatrixBase<Derived>& g) {
        Node& node = nodes_[static_cast<std::size_t>(id)];
        if (!node.needs_grad) return;
        if (!node.has_grad) {
            node.grad = g;
            node.has_grad = true;
        } else {
            node.grad += g;
        }
    }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool needs_grad = false;
        bool has_grad = false;
        Parameter* param = nullptr;
        Backward backward;
    };

    std::vector<Node> nodes_;
    bool grad_enabled_;
};

// ---------------------------------------------------------------- ops

Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);  // a * b^T
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var divide(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double c);

Var add_row(Var a, Var row);  // broadcasts a 1 x c row over every row of a
Var mul_col(Var a, Var col);  // out(i,j) = a(i,j) * col(i)

Var tanh(Var a);
Var gelu(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log_floor(Var a, double floor);  // log(max(a, floor))
Var square(Var a);

Var softmax_rows(Var a);
Var softmax_cols(Var a);
Var log_softmax_rows(Var a);

Var sum(Var a);       // 1 x 1
Var row_sum(Var a);   // N x 1
Var weighted_sum(Var a, const Matrix& weights);  // sum(w .* a), 1 x 1

Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count);
Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count);
Var gather_rows(Var a, const std::vector<int>& index);

Var layer_norm_rows(Var x, Var gain, Var bias, double eps = 1e-5);

// Zeroes column 0 (projection onto the tangent space at the origin).
Var zero_first_col(Var a);

// Row-wise Minkowski inner product of equally-shaped a, b: N x 1.
Var minkowski_rowdot(Var a, Var b);

}  // namespace hypertopic::ad
