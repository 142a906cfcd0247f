#include "cqsim/em_device.hpp"

#include <cmath>

#include "cqsim/matrix_io.hpp"

namespace cqsim {

namespace {

struct Grid {
    int n_nodes;
    double h;
    double x(int i) const { return -1.0 + (i + 1) * h; }
};

bool in_band(double x, double r_in, double r_out) {
    // Nodes sitting on the band edge count as conductor; the slack absorbs
    // round-off in x for grids that hit 1/3 and 2/3 exactly.
    const double r = std::abs(x);
    const double slack = 1e-12;
    return r >= r_in - slack && r <= r_out + slack;
}

Matrix stiffness(const Grid& g, double nu) {
    Matrix k = Matrix::Zero(g.n_nodes, g.n_nodes);
    const double scale = nu / g.h;
    for (int i = 0; i < g.n_nodes; ++i) {
        k(i, i) = 2.0 * scale;
        if (i > 0) {
            k(i, i - 1) = -scale;
        }
        if (i + 1 < g.n_nodes) {
            k(i, i + 1) = -scale;
        }
    }
    return k;
}

int parse_cells(const std::string& text, int fallback) {
    if (text.empty()) {
        return fallback;
    }
    std::size_t used = 0;
    int n = 0;
    try {
        n = std::stoi(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size()) {
        throw Error(ErrorKind::Config, "bad cell count '" + text + "' in model spec");
    }
    return n;
}

}  // namespace

void SyntheticEddyParams::validate() const {
    if (n_cells < 4) {
        throw Error(ErrorKind::PreconditionViolation, "synthetic eddy model needs n_cells >= 4");
    }
    if (!(sigma > 0.0) || !(nu > 0.0) || !(0.0 <= r_in && r_in < r_out && r_out < 1.0)) {
        throw Error(ErrorKind::PreconditionViolation, "invalid synthetic eddy parameters");
    }
}

SolidConductorModel build_synthetic_eddy(const SyntheticEddyParams& params) {
    params.validate();
    const Grid g{params.n_cells - 1, 2.0 / params.n_cells};

    SolidConductorModel model;
    model.M_sigma = Matrix::Zero(g.n_nodes, g.n_nodes);
    int contact = -1;
    for (int i = 0; i < g.n_nodes; ++i) {
        if (in_band(g.x(i), params.r_in, params.r_out)) {
            model.M_sigma(i, i) = params.sigma * g.h;
            if (contact < 0 && g.x(i) > 0.0) {
                contact = i;
            }
        }
    }
    if (contact < 0) {
        throw Error(ErrorKind::PreconditionViolation,
                    "synthetic eddy grid has no conductor node on the contact side");
    }
    model.K_nu = stiffness(g, params.nu);

    Vector p = Vector::Zero(g.n_nodes);
    p(contact) = 1.0 / g.h;
    model.B1 = params.sigma * g.h * p;
    model.B2 = Matrix::Constant(1, 1, params.sigma * p.squaredNorm() * g.h);
    return model;
}

StrandedConductorModel build_synthetic_transformer(int n_cells) {
    if (n_cells < 8) {
        throw Error(ErrorKind::PreconditionViolation,
                    "synthetic transformer needs n_cells >= 8");
    }
    const SyntheticEddyParams params;
    const Grid g{n_cells - 1, 2.0 / n_cells};

    Matrix mass = Matrix::Zero(g.n_nodes, g.n_nodes);
    Matrix windings = Matrix::Zero(g.n_nodes, 2);
    for (int i = 0; i < g.n_nodes; ++i) {
        if (in_band(g.x(i), params.r_in, params.r_out)) {
            mass(i, i) = params.sigma * g.h;
            windings(i, g.x(i) < 0.0 ? 0 : 1) = 1.0;
        }
    }
    for (int k = 0; k < 2; ++k) {
        const double integral = windings.col(k).sum() * g.h;
        windings.col(k) /= integral;
    }
    return StrandedConductorModel(std::move(mass), stiffness(g, params.nu),
                                  std::move(windings));
}

DescriptorSystem resolve_device_model(const std::string& spec,
                                      const std::filesystem::path& base_dir) {
    const std::string prefix = "synthetic";
    if (spec.rfind(prefix, 0) == 0) {
        std::string rest = spec.substr(prefix.size());
        if (rest.empty()) {
            return wrap_solid_as_descriptor(build_synthetic_eddy({}), PortMap::identity(1));
        }
        if (rest[0] != ':') {
            throw Error(ErrorKind::Config, "unknown device model '" + spec + "'");
        }
        rest = rest.substr(1);
        const auto colon = rest.find(':');
        const std::string kind = rest.substr(0, colon);
        const std::string cells = colon == std::string::npos ? "" : rest.substr(colon + 1);
        if (kind == "eddy") {
            SyntheticEddyParams params;
            params.n_cells = parse_cells(cells, params.n_cells);
            return wrap_solid_as_descriptor(build_synthetic_eddy(params),
                                            PortMap::identity(1));
        }
        if (kind == "transformer") {
            return wrap_stranded_as_descriptor(
                build_synthetic_transformer(parse_cells(cells, 100)), PortMap::identity(2));
        }
        throw Error(ErrorKind::Config, "unknown synthetic preset '" + kind + "'");
    }
    std::filesystem::path path = spec;
    if (path.is_relative()) {
        path = base_dir / path;
    }
    return load_descriptor(path);
}

}  // namespace cqsim
