#include "kslab/ntk.hpp"

#include <stdexcept>
#include <thread>
#include <vector>

namespace kslab {

NtkAlgorithm resolve_algorithm(NtkAlgorithm choice, const Mlp& net) {
    if (choice != NtkAlgorithm::Auto) return choice;
    return net.output_dim() < net.max_hidden_width() ? NtkAlgorithm::Backward
                                                     : NtkAlgorithm::Forward;
}

NtkAlgorithm ntk_algorithm_from_string(const std::string& name) {
    if (name == "backward") return NtkAlgorithm::Backward;
    if (name == "forward") return NtkAlgorithm::Forward;
    if (name == "auto") return NtkAlgorithm::Auto;
    throw std::invalid_argument("unknown algorithm: " + name);
}

std::string to_string(NtkAlgorithm a) {
    switch (a) {
        case NtkAlgorithm::Backward: return "backward";
        case NtkAlgorithm::Forward: return "forward";
        default: return "auto";
    }
}

Matrix colwise(const Matrix& a, const Vector& b) {
    if (a.cols() != b.size()) throw std::invalid_argument("colwise: shape mismatch");
    return a * b.asDiagonal();
}

namespace {

void check_trace(const Mlp& net, const ForwardTrace& t) {
    const std::size_t depth = net.weights.size();
    if (t.pre.size() != depth || t.post.size() != depth)
        throw std::invalid_argument("trace does not match network depth");
    for (std::size_t l = 0; l < depth; ++l)
        if (t.pre[l].rows() != net.dims[l + 1] || t.post[l].rows() != net.dims[l])
            throw std::invalid_argument("trace layer widths do not match network");
}

// Block kernel for trace columns (i, j); traces may hold whole batches.
Matrix pair_backward_cols(const Mlp& net, const ForwardTrace& tx, Eigen::Index i,
                          const ForwardTrace& txh, Eigen::Index j) {
    counters::gradient_passes.fetch_add(1, std::memory_order_relaxed);
    const int depth = static_cast<int>(net.weights.size());  // L+1 layers
    const int out_dim = net.output_dim();

    Matrix y = Matrix::Identity(out_dim, out_dim);
    Matrix yh = Matrix::Identity(out_dim, out_dim);
    const int last_hidden = depth - 1;  // index of x^(L) in post
    Matrix k = (1.0 + tx.post[last_hidden].col(i).dot(txh.post[last_hidden].col(j))) *
               Matrix::Identity(out_dim, out_dim);
    for (int l = depth; l >= 2; --l) {
        // W^(l) has index l-1; sigma'(y^(l-1)) comes from pre[l-2].
        const Vector sx = activate_derivative(net.activation, tx.pre[l - 2].col(i));
        const Vector sxh = activate_derivative(net.activation, txh.pre[l - 2].col(j));
        y = colwise(y * net.weights[l - 1], sx);
        yh = colwise(yh * net.weights[l - 1], sxh);
        k += (1.0 + tx.post[l - 2].col(i).dot(txh.post[l - 2].col(j))) * y * yh.transpose();
    }
    return k;
}

Matrix pair_forward_cols(const Mlp& net, const ForwardTrace& tx, Eigen::Index i,
                         const ForwardTrace& txh, Eigen::Index j) {
    counters::gradient_passes.fetch_add(1, std::memory_order_relaxed);
    const int depth = static_cast<int>(net.weights.size());
    Matrix k = (1.0 + tx.post[0].col(i).dot(txh.post[0].col(j))) *
               Matrix::Identity(net.dims[1], net.dims[1]);
    for (int l = 2; l <= depth; ++l) {
        const Matrix wx =
            colwise(net.weights[l - 1], activate_derivative(net.activation, tx.pre[l - 2].col(i)));
        const Matrix wxh =
            colwise(net.weights[l - 1], activate_derivative(net.activation, txh.pre[l - 2].col(j)));
        k = wx * k * wxh.transpose() +
            (1.0 + tx.post[l - 1].col(i).dot(txh.post[l - 1].col(j))) *
                Matrix::Identity(net.dims[l], net.dims[l]);
    }
    return k;
}

// Per-node ingredients of the contracted kernel c'K(x,xhat)c: the row
// vectors r_l = c' prod_{s>=l} [W^(s) (.) sigma'(y^(s-1))] for l = depth..2,
// plus the activations needed for the (1 + x.xhat) factors. With these, a
// whole Gram assembles from dense products instead of per-pair recursions.
struct ScalarKernelRows {
    std::vector<Matrix> rows;  // rows[r]: n x dims[depth-1-r], r = 0..depth-2
    const ForwardTrace* trace = nullptr;
};

ScalarKernelRows scalar_kernel_rows(const Mlp& net, const ForwardTrace& trace, const Vector& c) {
    counters::gradient_passes.fetch_add(1, std::memory_order_relaxed);
    const int depth = static_cast<int>(net.weights.size());
    const Eigen::Index n = trace.post[0].cols();

    ScalarKernelRows out;
    out.trace = &trace;
    out.rows.reserve(depth - 1);
    Matrix current = Matrix::Zero(n, net.output_dim());
    current.rowwise() = c.transpose();
    for (int l = depth; l >= 2; --l) {
        const Matrix sd = activate_derivative(net.activation, trace.pre[l - 2]);
        current = (current * net.weights[l - 1]).cwiseProduct(sd.transpose());
        out.rows.push_back(current);
    }
    return out;
}

Matrix scalar_gram_backward(const Mlp& net, const ScalarKernelRows& ra, const ScalarKernelRows& rb,
                            const Vector& c) {
    const int depth = static_cast<int>(net.weights.size());
    const ForwardTrace& ta = *ra.trace;
    const ForwardTrace& tb = *rb.trace;
    const Eigen::Index na = ta.post[0].cols();
    const Eigen::Index nb = tb.post[0].cols();

    const double c2 = c.squaredNorm();
    Matrix h = c2 * (Matrix::Ones(na, nb) + ta.post[depth - 1].transpose() * tb.post[depth - 1]);
    for (int l = depth; l >= 2; --l) {
        const int r = depth - l;
        const Matrix dots = ta.post[l - 2].transpose() * tb.post[l - 2];
        h += (Matrix::Ones(na, nb) + dots).cwiseProduct(ra.rows[r] * rb.rows[r].transpose());
    }
    return h;
}

int gram_thread_count(Eigen::Index pairs) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    return static_cast<int>(std::min<Eigen::Index>(hw, std::max<Eigen::Index>(1, pairs / 64)));
}

double contract_entry(const Matrix& block, const std::optional<Vector>& c) {
    if (!c) return block(0, 0);
    return c->dot(block * *c);
}

}  // namespace

Matrix ntk_pair_backward(const Mlp& net, const ForwardTrace& tx, const ForwardTrace& txh) {
    check_trace(net, tx);
    check_trace(net, txh);
    return pair_backward_cols(net, tx, 0, txh, 0);
}

Matrix ntk_pair_forward(const Mlp& net, const ForwardTrace& tx, const ForwardTrace& txh) {
    check_trace(net, tx);
    check_trace(net, txh);
    return pair_forward_cols(net, tx, 0, txh, 0);
}

Matrix parameter_jacobian(const Mlp& net, const Vector& x) {
    counters::gradient_passes.fetch_add(1, std::memory_order_relaxed);
    net.validate();
    const int depth = static_cast<int>(net.weights.size());
    const int out_dim = net.output_dim();
    const ForwardTrace trace = forward(net, x);

    Matrix jac(out_dim, net.parameter_count());
    // Reverse-mode pass with the identity seeded at the output layer; delta
    // holds d(output)/d(y^(l)) for every output row at once.
    Matrix delta = Matrix::Identity(out_dim, out_dim);
    long col_end = net.parameter_count();
    for (int l = depth - 1; l >= 0; --l) {
        const long w_count = net.weights[l].size();
        const long b_count = net.biases[l].size();
        const long col0 = col_end - w_count - b_count;
        // d y_out / d W^(l)_{km} = delta(:,k) * x^(l-1)_m, row-major in (k,m).
        for (int k = 0; k < net.weights[l].rows(); ++k)
            for (int m = 0; m < net.weights[l].cols(); ++m)
                jac.col(col0 + static_cast<long>(k) * net.weights[l].cols() + m) =
                    delta.col(k) * trace.post[l](m, 0);
        jac.middleCols(col0 + w_count, b_count) = delta;
        col_end = col0;
        if (l > 0)
            delta = colwise(delta * net.weights[l],
                            activate_derivative(net.activation, trace.pre[l - 1].col(0)));
    }
    return jac;
}

Matrix ntk_oracle(const Mlp& net, const Vector& x, const Vector& xh) {
    if (net.parameter_count() > 100000)
        throw std::invalid_argument("ntk_oracle: network too large for an explicit Jacobian");
    const Matrix jx = parameter_jacobian(net, x);
    const Matrix jxh = parameter_jacobian(net, xh);
    return jx * jxh.transpose();
}

Vector class_difference_contraction() {
    Vector c(2);
    c << 1.0, -1.0;
    return c;
}

namespace {

Matrix gram_matrix(const Mlp& net, const Matrix& nodes_a, const Matrix& nodes_b, bool symmetric,
                   NtkAlgorithm choice, const std::optional<Vector>& contraction) {
    net.validate();
    if (net.output_dim() != 1 && !contraction)
        throw std::invalid_argument("ntk_gram: multi-output network needs a contraction vector");
    if (contraction && contraction->size() != net.output_dim())
        throw std::invalid_argument("ntk_gram: contraction length does not match output width");

    const NtkAlgorithm algorithm = resolve_algorithm(choice, net);
    const ForwardTrace ta = forward(net, nodes_a);
    const ForwardTrace tb = symmetric ? ForwardTrace{} : forward(net, nodes_b);
    const ForwardTrace& tbr = symmetric ? ta : tb;
    const Eigen::Index na = nodes_a.cols();
    const Eigen::Index nb = symmetric ? na : nodes_b.cols();
    const Vector c = contraction ? *contraction : Vector::Ones(1);

    Matrix h(na, nb);
    if (algorithm == NtkAlgorithm::Backward) {
        const ScalarKernelRows ra = scalar_kernel_rows(net, ta, c);
        if (symmetric) {
            h = scalar_gram_backward(net, ra, ra, c);
        } else {
            const ScalarKernelRows rb = scalar_kernel_rows(net, tbr, c);
            h = scalar_gram_backward(net, ra, rb, c);
        }
    } else {
        // Horner-style recursion is inherently per pair; parallelise over
        // rows (disjoint writes, so the result is thread-count independent).
        auto fill_rows = [&](Eigen::Index row0, Eigen::Index row1) {
            for (Eigen::Index i = row0; i < row1; ++i) {
                const Eigen::Index j0 = symmetric ? i : 0;
                for (Eigen::Index j = j0; j < nb; ++j)
                    h(i, j) = contract_entry(pair_forward_cols(net, ta, i, tbr, j), contraction);
            }
        };
        const int threads = gram_thread_count(na * nb);
        if (threads <= 1) {
            fill_rows(0, na);
        } else {
            std::vector<std::thread> pool;
            const Eigen::Index chunk = (na + threads - 1) / threads;
            for (int t = 0; t < threads; ++t) {
                const Eigen::Index r0 = t * chunk;
                const Eigen::Index r1 = std::min<Eigen::Index>(na, r0 + chunk);
                if (r0 < r1) pool.emplace_back(fill_rows, r0, r1);
            }
            for (auto& th : pool) th.join();
        }
    }
    if (symmetric)  // mirror the upper triangle so H is exactly symmetric
        for (Eigen::Index i = 0; i < na; ++i)
            for (Eigen::Index j = 0; j < i; ++j) h(i, j) = h(j, i);
    return h;
}

}  // namespace

KernelGram ntk_gram(const Mlp& net, const Matrix& nodes_a, const Matrix& nodes_b,
                    NtkAlgorithm choice, const std::optional<Vector>& contraction) {
    KernelGram gram;
    gram.H = gram_matrix(net, nodes_a, nodes_b, false, choice, contraction);
    gram.kind = KernelKind::NTK;
    gram.nodes_a = nodes_a;
    gram.nodes_b = nodes_b;
    return gram;
}

KernelGram ntk_gram(const Mlp& net, const Matrix& nodes, NtkAlgorithm choice,
                    const std::optional<Vector>& contraction) {
    KernelGram gram;
    gram.H = gram_matrix(net, nodes, nodes, true, choice, contraction);
    gram.kind = KernelKind::NTK;
    gram.nodes_a = nodes;
    gram.nodes_b = nodes;
    gram.symmetric = true;
    return gram;
}

double min_eigenvalue(const Matrix& symmetric) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

}  // namespace kslab
