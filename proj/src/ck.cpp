#include "kslab/ck.hpp"

#include <stdexcept>

namespace kslab {

namespace {

Matrix last_hidden(const Mlp& net, const Matrix& nodes) {
    net.validate();
    const ForwardTrace trace = forward(net, nodes);
    return trace.post.back();
}

}  // namespace

Matrix ck_features(const Mlp& net, const Matrix& nodes) {
    const Matrix hidden = last_hidden(net, nodes);
    Matrix phi(hidden.rows() + 1, hidden.cols());
    phi.topRows(hidden.rows()) = hidden;
    phi.row(hidden.rows()).setOnes();
    return phi;
}

KernelGram ck_gram(const Mlp& net, const Matrix& nodes_a, const Matrix& nodes_b) {
    const Matrix ha = last_hidden(net, nodes_a);
    const Matrix hb = last_hidden(net, nodes_b);
    KernelGram gram;
    gram.H = (ha.transpose() * hb).array() + 1.0;
    gram.kind = KernelKind::CK;
    gram.nodes_a = nodes_a;
    gram.nodes_b = nodes_b;
    return gram;
}

KernelGram ck_gram(const Mlp& net, const Matrix& nodes) {
    const Matrix hidden = last_hidden(net, nodes);
    KernelGram gram;
    gram.H = (hidden.transpose() * hidden).array() + 1.0;
    for (Eigen::Index i = 0; i < gram.H.rows(); ++i)
        for (Eigen::Index j = 0; j < i; ++j) gram.H(i, j) = gram.H(j, i);
    gram.kind = KernelKind::CK;
    gram.nodes_a = nodes;
    gram.nodes_b = nodes;
    gram.symmetric = true;
    return gram;
}

}  // namespace kslab
