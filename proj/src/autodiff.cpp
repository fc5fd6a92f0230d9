#include "hypertopic/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hypertopic::ad {

// ------------------------------------------------------------ parameters

Parameter& ParameterStore::add(std::string name, Matrix init) {
    if (contains(name)) throw std::invalid_argument("duplicate parameter: " + name);
    Parameter p;
    p.name = std::move(name);
    p.value = std::move(init);
    p.zero_grad();
    params_.push_back(std::move(p));
    return params_.back();
}

Parameter& ParameterStore::at(std::string_view name) {
    for (auto& p : params_) {
        if (p.name == name) return p;
    }
    throw std::out_of_range("unknown parameter: " + std::string(name));
}

const Parameter& ParameterStore::at(std::string_view name) const {
    for (const auto& p : params_) {
        if (p.name == name) return p;
    }
    throw std::out_of_range("unknown parameter: " + std::string(name));
}

bool ParameterStore::contains(std::string_view name) const {
    return std::any_of(params_.begin(), params_.end(), [&](const Parameter& p) { return p.name == name; });
}

void ParameterStore::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

std::size_t ParameterStore::scalar_count() const {
    std::size_t total = 0;
    for (const auto& p : params_) total += static_cast<std::size_t>(p.value.size());
    return total;
}

// ------------------------------------------------------------ tape

const Matrix& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Matrix value) {
    Node node;
    node.value = std::move(value);
    nodes_.push_back(std::move(node));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::parameter(Parameter& p) {
    Node node;
    node.value = p.value;
    node.needs_grad = grad_enabled_;
    node.param = &p;
    nodes_.push_back(std::move(node));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
    Node node;
    node.value = std::move(value);
    if (grad_enabled_) {
        for (const Var& v : inputs) {
            if (v.tape_ != this) throw std::logic_error("ad: mixing tapes");
            if (nodes_[static_cast<std::size_t>(v.id_)].needs_grad) node.needs_grad = true;
        }
        if (node.needs_grad) node.backward = std::move(backward);
    }
    nodes_.push_back(std::move(node));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Matrix value, const std::vector<Var>& inputs, Backward backward) {
    Node node;
    node.value = std::move(value);
    if (grad_enabled_) {
        for (const Var& v : inputs) {
            if (v.tape_ != this) throw std::logic_error("ad: mixing tapes");
            if (nodes_[static_cast<std::size_t>(v.id_)].needs_grad) node.needs_grad = true;
        }
        if (node.needs_grad) node.backward = std::move(backward);
    }
    nodes_.push_back(std::move(node));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::backward(Var root) {
    if (!grad_enabled_) throw std::logic_error("ad: backward on a no-grad tape");
    if (root.tape_ != this || root.value().size() != 1) {
        throw std::invalid_argument("ad: backward root must be a scalar on this tape");
    }
    accumulate(root.id_, Matrix::Ones(1, 1));
    for (int id = root.id_; id >= 0; --id) {
        Node& node = nodes_[static_cast<std::size_t>(id)];
        if (!node.has_grad) continue;
        if (node.backward) {
            // The closure may append to other nodes' grads but never to this one.
            const Matrix g = std::move(node.grad);
            node.has_grad = false;
            node.backward(*this, g);
        } else if (node.param != nullptr) {
            node.param->grad += node.grad;
            node.has_grad = false;
        }
    }
}

// ------------------------------------------------------------ ops

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument(std::string("ad::") + op + ": shape mismatch");
    }
}

}  // namespace

Var matmul(Var a, Var b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("ad::matmul: inner dimension mismatch");
    Tape& t = *a.tape();
    const int ia = a.id(), ib = b.id();
    return t.record(a.value() * b.value(), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
        if (t.needs_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
        if (t.needs_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
    });
}

Var matmul_nt(Var a, Var b) {
    if (a.cols() != b.cols()) throw std::invalid_argument("ad::matmul_nt: inner dimension mismatch");
    Tape& t = *a.tape();
    const int ia = a.id(), ib = b.id();
    return t.record(a.value() * b.value().transpose(), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
        if (t.needs_grad(ia)) t.accumulate(ia, g * t.value(ib));
        if (t.needs_grad(ib)) t.accumulate(ib, g.transpose() * t.value(ia));
    });
}

Var transpose(Var a) {
    Tape& t = *a.tape();
    const int ia = a.id();
    return t.record(a.value().transpose(), {a},
                    [ia](Tape& t, const Matrix& g) { t.accumulate(ia, g.transpose()); });
}

Var add(Var a, Var b) {
    require_same_shape(a, b, "add");
    Tape& t = *a.tape();
    const int ia = a.id(), ib = b.id();
    return t.record(a.value() + b.value(), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
        t.accumulate(ia, g);
        t.accumulate(ib, g);
    });
}

Var sub(Var a, Var b) {
    require_same_shape(a, b, "sub");
    Tape& t = *a.tape();
    const int ia = a.id(), ib = b.id();
    return t.record(a.value() - b.value(), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
        t.accumulate(ia, g);
        t.accumulate(ib, -g);
    });
}

Var hadamard(Var a, Var b) {
    require_same_shape(a, b, "hadamard");
    Tape& t = *a.tape();
    const int ia = a.id(), ib = b.id();
    return t.record(a.value().cwiseProduct(b.value()), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
        if (t.needs_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
        if (t.needs_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
    });
}

Var divide(Var a, Var b) {
    require_same_shape(a, b, "divide");
    Tape& t = *a.tape();
    const int ia = a.id(), ib = b.id();
    return t.record(a.value().cwiseQuotient(b.value()), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
        const Matrix& bv = t.value(ib);
        if (t.needs_grad(ia)) t.accumulate(ia, g.cwiseQuotient(bv));
        if (t.needs_grad(ib)) {
            const Matrix& av = t.value(ia);
            t.accumulate(ib, -(g.cwiseProduct(av).array() / bv.array().square()).matrix());
        }
    });
}

Var scale(Var a, double s) {
    Tape& t = *a.tape();
    const int ia = a.id();
    return t.record(a.value() * s, {a}, [ia, s](Tape& t, const Matrix& g) { t.accumulate(ia, g * s); });
}

Var add_scalar(Var a, double c) {
    Tape& t = *a.tape();
    const int ia = a.id();
    return t.record((a.value().array() + c).matrix(), {a},
                    [ia](Tape& t, const Matrix& g) { t.accumulate(ia, g); });
}

Var add_row(Var a, Var row) {
    if (row.rows() != 1 || row.cols() != a.cols()) throw std::invalid_argument("ad::add_row: bad row shape");
    Tape& t = *a.tape();
    const int ia = a.id(), ir = row.id();
    Matrix out = a.value();
    out.rowwise() += row.value().row(0);
    return t.record(std::move(out), {a, row}, [ia, ir](Tape& t, const Matrix& g) {
        t.accumulate(ia, g);
        if (t.needs_grad(ir)) t.accumulate(ir, g.colwise().sum());
    });
}

Var mul_col(Var a, Var col) {
    if (col.cols() != 1 || col.rows() != a.rows()) throw std::invalid_argument("ad::mul_col: bad column shape");
    Tape& t = *a.tape();
    const int ia = a.id(), ic = col.id();
    Matrix out = a.value().array().colwise() * col.value().col(0).array();
    return t.record(std::move(out), {a, col}, [ia, ic](Tape& t, const Matrix& g) {
        if (t.needs_grad(ia)) {
            Matrix ga = g.array().colwise() * t.value(ic).col(0).array();
            t.accumulate(ia, ga);
        }
        if (t.needs_grad(ic)) t.accumulate(ic, g.cwiseProduct(t.value(ia)).rowwise().sum());
    });
}

Var tanh(Var a) {
    Tape& t = *a.tape();
    const int ia = a.id();
    Matrix out = a.value().array().tanh().matrix();
    const int io = static_cast<int>(t.size());
    return t.record(std::move(out), {a}, [ia, io](Tape& t, const Matrix& g) {
        const Matrix& y = t.value(io);
        t.accumulate(ia, (g.array() * (1.0 - y.array().square())).matrix());
    });
}

Var gelu(Var a) {
    Tape& t = *a.tape();
    const int ia = a.id();
    const Matrix& x = a.value();
    Matrix out = x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))); });
    return t.record(std::move(out), {a}, [ia](Tape& t, const Matrix& g) {
        const Matrix d = t.value(ia).unaryExpr([](double v) {
            const double cdf = 0.5 * (1.0 + std::erf(v / std::sqrt(2.0)));
            const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * M_PI);
            return cdf + v * pdf;
        });
        t.accumulate(ia, g.cwiseProduct(d));
    });
}

Var sigmoid(Var a) {
    Tape& t = *a.tape();
    const int ia = a.id();
    Matrix out = a.value().unaryExpr([](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
    });
    const int io = static_cast<int>(t.size());
    return t.record(std::move(out), {a}, [ia, io](Tape& t, const Matrix& g) {
        const Matrix& y = t.value(io);
        t.accumulate(ia, (g.array() * y.array() * (1.0 - y.array())).matrix());
    });
}

Var exp(Var a) {
    Tape& t = *a.tape();
    const int ia = a.id();
    Matrix out = a.value().array().exp().matrix();
    const int io = static_cast<int>(t.size());
    return t.record(std::move(out), {a}, [ia, io](Tape& t, const Matrix& g) {
        t.accumulate(ia, g.cwiseProduct(t.value(io)));
    });
}

Var log_floor(Var a, double floor) {
    Tape& t = *a.tape();
    const int ia = a.id();
    Matrix out = a.value().unaryExpr([floor](double v) { return std::log(std::max(v, floor)); });
    return t.record(std::move(out), {a}, [ia, floor](Tape& t, const Matrix& g) {
        const Matrix& x = t.value(ia);
        Matrix d = x.unaryExpr([floor](double v) { return v > floor ? 1.0 / v : 0.0; });
        t.accumulate(ia, g.cwiseProduct(d));
    });
}

Var square(Var a) {
    Tape& t = *a.tape();
    const int ia = a.id();
    return t.record(a.value().array().square().matrix(), {a}, [ia](Tape& t, const Matrix& g) {
        t.accumulate(ia, 2.0 * g.cwiseProduct(t.value(ia)));
    });
}

namespace {

Matrix softmax_rows_value(const Matrix& x) {
    Matrix y(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double m = x.row(r).maxCoeff();
        y.row(r) = (x.row(r).array() - m).exp().matrix();
        y.row(r) /= y.row(r).sum();
    }
    return y;
}

}  // namespace

Var softmax_rows(Var a) {
    Tape& t = *a.tape();
    const int ia = a.id();
    const int io = static_cast<int>(t.size());
    return t.record(softmax_rows_value(a.value()), {a}, [ia, io](Tape& t, const Matrix& g) {
        const Matrix& y = t.value(io);
        const Eigen::VectorXd dots = g.cwiseProduct(y).rowwise().sum();
        Matrix gx = y.array() * (g.array().colwise() - dots.array());
        t.accumulate(ia, gx);
    });
}

Var softmax_cols(Var a) { return transpose(softmax_rows(transpose(a))); }

Var log_softmax_rows(Var a) {
    Tape& t = *a.tape();
    const int ia = a.id();
    const Matrix& x = a.value();
    const Eigen::VectorXd mx = x.rowwise().maxCoeff();
    Matrix out = x.array().colwise() - mx.array();
    const Eigen::VectorXd lse = out.array().exp().rowwise().sum().log();
    out.array().colwise() -= lse.array();
    Matrix y = out.array().exp();
    return t.record(std::move(out), {a}, [ia, y = std::move(y)](Tape& t, const Matrix& g) {
        const Eigen::VectorXd gs = g.rowwise().sum();
        Matrix gx = g - (y.array().colwise() * gs.array()).matrix();
        t.accumulate(ia, gx);
    });
}

Var sum(Var a) {
    Tape& t = *a.tape();
    const int ia = a.id();
    Matrix out(1, 1);
    out(0, 0) = a.value().sum();
    const Eigen::Index r = a.rows(), c = a.cols();
    return t.record(std::move(out), {a}, [ia, r, c](Tape& t, const Matrix& g) {
        t.accumulate(ia, Matrix::Constant(r, c, g(0, 0)));
    });
}

Var row_sum(Var a) {
    Tape& t = *a.tape();
    const int ia = a.id();
    Matrix out = a.value().rowwise().sum();
    const Eigen::Index c = a.cols();
    return t.record(std::move(out), {a}, [ia, c](Tape& t, const Matrix& g) {
        t.accumulate(ia, g.col(0).replicate(1, c));
    });
}

Var weighted_sum(Var a, const Matrix& weights) {
    if (weights.rows() != a.rows() || weights.cols() != a.cols()) {
        throw std::invalid_argument("ad::weighted_sum: shape mismatch");
    }
    Tape& t = *a.tape();
    const int ia = a.id();
    Matrix out(1, 1);
    out(0, 0) = a.value().cwiseProduct(weights).sum();
    return t.record(std::move(out), {a}, [ia, weights](Tape& t, const Matrix& g) {
        t.accumulate(ia, weights * g(0, 0));
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("ad::concat_rows: empty");
    Tape& t = *parts.front().tape();
    const Eigen::Index cols = parts.front().cols();
    Eigen::Index rows = 0;
    for (const Var& p : parts) {
        if (p.cols() != cols) throw std::invalid_argument("ad::concat_rows: column mismatch");
        rows += p.rows();
    }
    Matrix out(rows, cols);
    std::vector<std::pair<int, Eigen::Index>> spans;
    Eigen::Index at = 0;
    for (const Var& p : parts) {
        out.middleRows(at, p.rows()) = p.value();
        spans.emplace_back(p.id(), at);
        at += p.rows();
    }
    return t.record(std::move(out), parts, [spans](Tape& t, const Matrix& g) {
        for (const auto& [id, start] : spans) {
            if (t.needs_grad(id)) t.accumulate(id, g.middleRows(start, t.value(id).rows()));
        }
    });
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("ad::concat_cols: empty");
    Tape& t = *parts.front().tape();
    const Eigen::Index rows = parts.front().rows();
    Eigen::Index cols = 0;
    for (const Var& p : parts) {
        if (p.rows() != rows) throw std::invalid_argument("ad::concat_cols: row mismatch");
        cols += p.cols();
    }
    Matrix out(rows, cols);
    std::vector<std::pair<int, Eigen::Index>> spans;
    Eigen::Index at = 0;
    for (const Var& p : parts) {
        out.middleCols(at, p.cols()) = p.value();
        spans.emplace_back(p.id(), at);
        at += p.cols();
    }
    return t.record(std::move(out), parts, [spans](Tape& t, const Matrix& g) {
        for (const auto& [id, start] : spans) {
            if (t.needs_grad(id)) t.accumulate(id, g.middleCols(start, t.value(id).cols()));
        }
    });
}

Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count) {
    if (begin < 0 || count < 0 || begin + count > a.rows()) throw std::out_of_range("ad::slice_rows");
    Tape& t = *a.tape();
    const int ia = a.id();
    const Eigen::Index r = a.rows(), c = a.cols();
    return t.record(a.value().middleRows(begin, count), {a}, [ia, r, c, begin, count](Tape& t, const Matrix& g) {
        Matrix full = Matrix::Zero(r, c);
        full.middleRows(begin, count) = g;
        t.accumulate(ia, full);
    });
}

Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count) {
    if (begin < 0 || count < 0 || begin + count > a.cols()) throw std::out_of_range("ad::slice_cols");
    Tape& t = *a.tape();
    const int ia = a.id();
    const Eigen::Index r = a.rows(), c = a.cols();
    return t.record(a.value().middleCols(begin, count), {a}, [ia, r, c, begin, count](Tape& t, const Matrix& g) {
        Matrix full = Matrix::Zero(r, c);
        full.middleCols(begin, count) = g;
        t.accumulate(ia, full);
    });
}

Var gather_rows(Var a, const std::vector<int>& index) {
    Tape& t = *a.tape();
    const int ia = a.id();
    Matrix out(static_cast<Eigen::Index>(index.size()), a.cols());
    for (std::size_t k = 0; k < index.size(); ++k) {
        if (index[k] < 0 || index[k] >= a.rows()) throw std::out_of_range("ad::gather_rows");
        out.row(static_cast<Eigen::Index>(k)) = a.value().row(index[k]);
    }
    const Eigen::Index r = a.rows(), c = a.cols();
    return t.record(std::move(out), {a}, [ia, r, c, index](Tape& t, const Matrix& g) {
        Matrix full = Matrix::Zero(r, c);
        for (std::size_t k = 0; k < index.size(); ++k) full.row(index[k]) += g.row(static_cast<Eigen::Index>(k));
        t.accumulate(ia, full);
    });
}

Var layer_norm_rows(Var x, Var gain, Var bias, double eps) {
    const Eigen::Index d = x.cols();
    if (gain.rows() != 1 || gain.cols() != d || bias.rows() != 1 || bias.cols() != d) {
        throw std::invalid_argument("ad::layer_norm_rows: gain/bias shape");
    }
    Tape& t = *x.tape();
    const Matrix& xv = x.value();
    Matrix xhat(xv.rows(), d);
    Eigen::VectorXd inv_std(xv.rows());
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
        const double mean = xv.row(r).mean();
        const double var = (xv.row(r).array() - mean).square().mean();
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        xhat.row(r) = (xv.row(r).array() - mean) * inv_std[r];
    }
    Matrix out = xhat.array().rowwise() * gain.value().row(0).array();
    out.rowwise() += bias.value().row(0);
    const int ix = x.id(), ig = gain.id(), ib = bias.id();
    return t.record(std::move(out), {x, gain, bias},
                    [ix, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, const Matrix& g) {
                        if (t.needs_grad(ig)) t.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
                        if (t.needs_grad(ib)) t.accumulate(ib, g.colwise().sum());
                        if (t.needs_grad(ix)) {
                            Matrix dxhat = g.array().rowwise() * t.value(ig).row(0).array();
                            const Eigen::Index dd = dxhat.cols();
                            Matrix dx(dxhat.rows(), dd);
                            for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
                                const double m1 = dxhat.row(r).sum() / static_cast<double>(dd);
                                const double m2 = dxhat.row(r).dot(xhat.row(r)) / static_cast<double>(dd);
                                dx.row(r) = inv_std[r] * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
                            }
                            t.accumulate(ix, dx);
                        }
                    });
}

Var zero_first_col(Var a) {
    Tape& t = *a.tape();
    const int ia = a.id();
    Matrix out = a.value();
    out.col(0).setZero();
    return t.record(std::move(out), {a}, [ia](Tape& t, const Matrix& g) {
        Matrix ga = g;
        ga.col(0).setZero();
        t.accumulate(ia, ga);
    });
}

Var minkowski_rowdot(Var a, Var b) {
    require_same_shape(a, b, "minkowski_rowdot");
    Tape& t = *a.tape();
    const int ia = a.id(), ib = b.id();
    Matrix out = a.value().cwiseProduct(b.value()).rowwise().sum();
    out.col(0) -= 2.0 * a.value().col(0).cwiseProduct(b.value().col(0));
    return t.record(std::move(out), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
        auto signed_scale = [&](const Matrix& other) {
            Matrix m = other.array().colwise() * g.col(0).array();
            m.col(0) = -m.col(0);
            return m;
        };
        if (t.needs_grad(ia)) t.accumulate(ia, signed_scale(t.value(ib)));
        if (t.needs_grad(ib)) t.accumulate(ib, signed_scale(t.value(ia)));
    });
}

}  // namespace hypertopic::ad
