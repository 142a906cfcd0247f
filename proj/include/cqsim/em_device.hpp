#pragma once

#include <filesystem>
#include <string>

#include "cqsim/lti.hpp"

namespace cqsim {

/// One-dimensional finite-difference stand-in for a 2D eddy-current device
/// on (-1, 1): unknowns at the interior nodes x_i = -1 + i h, h = 2/n_cells,
/// homogeneous Dirichlet ends. Nodes with r_in <= |x_i| <= r_out conduct.
struct SyntheticEddyParams {
    int n_cells = 200;
    double sigma = 1.0;
    double nu = 1.0;
    double r_in = 1.0 / 3.0;
    double r_out = 2.0 / 3.0;

    void validate() const;
};

/// M_sigma = sigma h diag(conductor), K_nu = (nu/h) tridiag(-1, 2, -1),
/// contact potential gradient p = 1/h at the first conductor node with x > 0,
/// B1 = sigma h p, B2 = sigma sum(p^2) h.
SolidConductorModel build_synthetic_eddy(const SyntheticEddyParams& params);

/// Same diffusion core with two windings: w1 on the left conductor band,
/// w2 on the right, each normalized to unit discrete integral.
StrandedConductorModel build_synthetic_transformer(int n_cells);

/// Resolves an `M` element model string to a port-level descriptor
/// (inputs = outputs = ports):
///   synthetic                       eddy surrogate, 200 cells
///   synthetic:eddy[:<n_cells>]
///   synthetic:transformer[:<n_cells>]   (two ports, default 100 cells)
///   <path>                          descriptor manifest, relative to base_dir
DescriptorSystem resolve_device_model(const std::string& spec,
                                      const std::filesystem::path& base_dir);

}  // namespace cqsim
