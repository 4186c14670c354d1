#pragma once

#include <cmath>
#include <vector>

#include "opa/fock.hpp"

namespace opa_test {

// |psi><psi| on Fock indices 0..dim-1.
inline opa::DensityMatrix rank1(const opa::FockVector& psi, int dim) {
    opa::DensityMatrix rho;
    rho.dim = dim;
    rho.a.assign(std::size_t(dim) * dim, opa::cplx(0.0));
    for (int m = 0; m < dim; ++m) {
        if (m > psi.n_max()) break;
        for (int n = 0; n < dim; ++n) {
            if (n > psi.n_max()) break;
            rho.at(m, n) = psi.amps[std::size_t(m)] * std::conj(psi.amps[std::size_t(n)]);
        }
    }
    rho.normalize_trace();
    return rho;
}

inline opa::DensityMatrix fock_projector(int n, int dim) {
    opa::DensityMatrix rho;
    rho.dim = dim;
    rho.a.assign(std::size_t(dim) * dim, opa::cplx(0.0));
    rho.at(n, n) = 1.0;
    return rho;
}

inline opa::SchemeParams fig2_params() {
    opa::SchemeParams p;
    p.alpha = 5.0;
    p.r = 1.5;
    p.eta = 0.1;
    p.n_det = 0;
    p.n_max = opa::choose_truncation(p);
    return p;
}

}  // namespace opa_test
