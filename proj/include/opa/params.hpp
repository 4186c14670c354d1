#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "opa/errors.hpp"

namespace opa {

// Physical inputs of the conditioning scheme plus numerical controls.
//
// The signal mode starts in the coherent state |alpha> (alpha real and
// nonnegative; complex amplitudes are exercised only through the
// brute-force oracle paths), the idler in vacuum. The idler is counted
// by a detector of quantum efficiency eta and the signal state is kept
// when the detector reports n_det counts.
struct SchemeParams {
    double alpha = 5.0;       // signal coherent amplitude
    double r = 1.5;           // OPA gain parameter
    double eta = 0.1;         // idler detector quantum efficiency
    int n_det = 0;            // detected idler photon count
    int n_max = 0;            // Fock truncation cutoff; 0 = not yet chosen
    double tail_tol = 1e-12;  // maximum neglected probability mass
    int n_max_cap = 5000;     // hard cap for automatic truncation sizing

    // alpha' = alpha / cosh r, the deamplified coherent amplitude.
    double alpha_prime() const { return alpha / std::cosh(r); }

    // epsilon = (1 - eta) tanh^2 r, the single parameter controlling the
    // displacement and broadening of all conditional distributions.
    double epsilon() const {
        const double t = std::tanh(r);
        return (1.0 - eta) * t * t;
    }

    // Validates everything except the truncation cutoff; choose_truncation
    // consumes parameters in this state.
    void validate_physical() const {
        if (!(alpha >= 0.0) || !std::isfinite(alpha))
            throw std::invalid_argument("SchemeParams: alpha must be finite and >= 0");
        if (!(r >= 0.0) || !std::isfinite(r))
            throw std::invalid_argument("SchemeParams: r must be finite and >= 0");
        if (!(eta >= 0.0 && eta <= 1.0))
            throw std::invalid_argument("SchemeParams: eta must lie in [0, 1]");
        if (n_det < 0)
            throw std::invalid_argument("SchemeParams: n_det must be >= 0");
        if (!(tail_tol > 0.0 && tail_tol < 1.0))
            throw std::invalid_argument("SchemeParams: tail_tol must lie in (0, 1)");
        if (n_max_cap < 1)
            throw std::invalid_argument("SchemeParams: n_max_cap must be >= 1");
        if (!(epsilon() < 1.0))
            throw std::invalid_argument("SchemeParams: (1-eta) tanh^2 r must be < 1");
    }

    void validate() const {
        validate_physical();
        if (n_max < 1)
            throw std::invalid_argument("SchemeParams: n_max must be >= 1");
    }

    SchemeParams with_n_max(int n) const {
        SchemeParams p = *this;
        p.n_max = n;
        return p;
    }
};

}  // namespace opa
