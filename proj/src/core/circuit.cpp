#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "cqsim/circuit.hpp"
#include "cqsim/em_device.hpp"
#include "cqsim/error.hpp"

namespace cqsim {

double Shockley::current(double v) const {
    const double arg = k * v;
    if (arg > kShockleyExponentLimit) {
        throw Error(ErrorKind::Overflow, "diode exponent " + std::to_string(arg) + " exceeds 700");
    }
    return Is * (std::exp(arg) + offset);
}

double Shockley::derivative(double v) const {
    const double arg = k * v;
    if (arg > kShockleyExponentLimit) {
        throw Error(ErrorKind::Overflow, "diode exponent " + std::to_string(arg) + " exceeds 700");
    }
    return Is * k * std::exp(arg);
}

int Netlist::count(ElementKind kind) const {
    return static_cast<int>(std::count_if(elements.begin(), elements.end(),
                                          [&](const Element& e) { return e.kind == kind; }));
}

namespace {

std::vector<std::string> tokenize(const std::string& line) {
    std::istringstream is(line.substr(0, line.find('#')));
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) {
        out.push_back(tok);
    }
    return out;
}

std::optional<ElementKind> kind_of(char c) {
    switch (std::toupper(static_cast<unsigned char>(c))) {
        case 'R': return ElementKind::R;
        case 'C': return ElementKind::C;
        case 'L': return ElementKind::L;
        case 'V': return ElementKind::V;
        case 'D': return ElementKind::D;
        case 'M': return ElementKind::M;
        default: return std::nullopt;
    }
}

class NetlistParser {
public:
    NetlistParser(std::string source, std::filesystem::path base_dir)
        : source_(std::move(source)) {
        net_.base_dir = std::move(base_dir);
    }

    Netlist parse(const std::string& text) {
        std::vector<std::pair<int, std::vector<std::string>>> lines;
        std::istringstream in(text);
        std::string raw;
        int line_no = 0;
        while (std::getline(in, raw)) {
            ++line_no;
            auto toks = tokenize(raw);
            if (toks.empty()) {
                continue;
            }
            if (toks[0] == ".nodes") {
                declared_ = true;
                for (std::size_t i = 1; i < toks.size(); ++i) {
                    if (toks[i] == "0") {
                        throw fail(line_no, "ground cannot be declared");
                    }
                    node_index(toks[i], line_no, true);
                }
                continue;
            }
            if (toks[0][0] == '.') {
                throw fail(line_no, "unknown directive '" + toks[0] + "'");
            }
            lines.emplace_back(line_no, std::move(toks));
        }
        for (auto& [no, toks] : lines) {
            parse_element(no, toks);
        }
        check_structure();
        return std::move(net_);
    }

private:
    std::string source_;
    Netlist net_;
    std::map<std::string, int> nodes_;
    std::set<std::string> names_;
    bool declared_ = false;

    Error fail(int line, const std::string& msg) const {
        return Error(ErrorKind::Parse, source_ + ":" + std::to_string(line) + ": " + msg);
    }

    int node_index(const std::string& tok, int line, bool declaring = false) {
        if (tok == "0") {
            return 0;
        }
        auto it = nodes_.find(tok);
        if (it != nodes_.end()) {
            if (declaring) {
                throw fail(line, "node '" + tok + "' declared twice");
            }
            return it->second;
        }
        if (declared_ && !declaring) {
            throw fail(line, "undeclared node '" + tok + "'");
        }
        net_.node_names.push_back(tok);
        const int idx = net_.nodes();
        nodes_.emplace(tok, idx);
        return idx;
    }

    double number(const std::string& tok, int line, const std::string& what) const {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size() || !std::isfinite(v)) {
            throw fail(line, "invalid " + what + " '" + tok + "'");
        }
        return v;
    }

    void parse_element(int line, std::vector<std::string> toks) {
        // Both `R1 1 0 10` and `R R1 1 0 10` are accepted.
        if (toks[0].size() == 1 && kind_of(toks[0][0])) {
            toks.erase(toks.begin());
            if (toks.empty()) {
                throw fail(line, "element name missing");
            }
        }
        Element e;
        e.line = line;
        e.name = toks[0];
        const auto kind = kind_of(e.name[0]);
        if (!kind) {
            throw fail(line, "unknown element kind in '" + e.name + "'");
        }
        e.kind = *kind;
        if (!names_.insert(e.name).second) {
            throw fail(line, "duplicate element name '" + e.name + "'");
        }
        auto need = [&](std::size_t lo, std::size_t hi) {
            if (toks.size() < lo || toks.size() > hi) {
                throw fail(line, "wrong number of fields for " + e.name);
            }
        };
        auto two_nodes = [&]() {
            e.nodes = {node_index(toks[1], line), node_index(toks[2], line)};
            if (e.nodes[0] == e.nodes[1]) {
                throw fail(line, e.name + " connects a node to itself");
            }
        };
        switch (e.kind) {
            case ElementKind::R:
            case ElementKind::C:
            case ElementKind::L:
                need(4, 4);
                two_nodes();
                e.value = number(toks[3], line, "value");
                if (!(e.value > 0.0)) {
                    throw fail(line, e.name + " needs a positive value");
                }
                break;
            case ElementKind::V:
                need(6, 6);
                two_nodes();
                if (toks[3] != "sin") {
                    throw fail(line, "only `sin amp omega` sources are supported");
                }
                e.amplitude = number(toks[4], line, "amplitude");
                e.omega = number(toks[5], line, "angular frequency");
                break;
            case ElementKind::D:
                need(5, 6);
                two_nodes();
                e.diode.Is = number(toks[3], line, "saturation current");
                e.diode.k = number(toks[4], line, "exponent factor");
                if (toks.size() == 6) {
                    e.diode.offset = number(toks[5], line, "offset");
                    e.diode_offset_given = true;
                }
                break;
            case ElementKind::M: {
                if (toks.size() != 4 && toks.size() != 6) {
                    throw fail(line, "M element needs 1 or 2 node pairs and model=");
                }
                const std::string& m = toks.back();
                if (m.rfind("model=", 0) != 0 || m.size() == 6) {
                    throw fail(line, "M element needs a trailing model=<...>");
                }
                e.model = m.substr(6);
                for (std::size_t i = 1; i + 1 < toks.size(); i += 2) {
                    const int a = node_index(toks[i], line);
                    const int b = node_index(toks[i + 1], line);
                    if (a == b) {
                        throw fail(line, e.name + " port shorts a node to itself");
                    }
                    e.nodes.push_back(a);
                    e.nodes.push_back(b);
                }
                break;
            }
        }
        net_.elements.push_back(std::move(e));
    }

    void check_structure() const {
        const int n = net_.nodes();
        if (net_.elements.empty()) {
            throw Error(ErrorKind::Config, source_ + ": netlist has no elements");
        }
        std::vector<int> parent(static_cast<std::size_t>(n) + 1);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int a) {
            while (parent[static_cast<std::size_t>(a)] != a) {
                a = parent[static_cast<std::size_t>(a)] =
                    parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            }
            return a;
        };
        std::vector<int> terminals(static_cast<std::size_t>(n) + 1, 0);
        bool grounded = false;
        for (const Element& e : net_.elements) {
            for (std::size_t i = 0; i < e.nodes.size(); i += 2) {
                parent[static_cast<std::size_t>(find(e.nodes[i]))] = find(e.nodes[i + 1]);
            }
            for (int node : e.nodes) {
                ++terminals[static_cast<std::size_t>(node)];
                grounded = grounded || node == 0;
            }
        }
        if (!grounded) {
            throw Error(ErrorKind::Config, source_ + ": no element connects to ground (node 0)");
        }
        for (int i = 1; i <= n; ++i) {
            const std::string& name = net_.node_names[static_cast<std::size_t>(i - 1)];
            if (terminals[static_cast<std::size_t>(i)] < 2) {
                throw Error(ErrorKind::Config, source_ + ": dangling node '" + name + "'");
            }
            if (find(i) != find(0)) {
                throw Error(ErrorKind::Config,
                            source_ + ": node '" + name + "' is not connected to ground");
            }
        }
    }
};

// Adds the incidence column (+1 at n+, -1 at n-) of a two-terminal branch.
void stamp_incidence(Matrix& A, Index col, int np, int nm) {
    if (np > 0) {
        A(np - 1, col) += 1.0;
    }
    if (nm > 0) {
        A(nm - 1, col) -= 1.0;
    }
}

double branch_voltage(const Vector& u, int np, int nm) {
    return (np > 0 ? u(np - 1) : 0.0) - (nm > 0 ? u(nm - 1) : 0.0);
}

}  // namespace

Netlist parse_netlist(const std::string& text, const std::string& source,
                      const std::filesystem::path& base_dir) {
    return NetlistParser(source, base_dir).parse(text);
}

Netlist load_netlist(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open netlist " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_netlist(text.str(), path.string(), path.parent_path());
}

namespace {

struct DiodeBranch {
    int np;
    int nm;
    Shockley law;
};

struct SineSource {
    double amplitude;
    double omega;
};

}  // namespace

MnaModel build_mna(const Netlist& netlist, const DescriptorSystem& device,
                   const MnaOptions& opts) {
    const int n = netlist.nodes();
    const int nL = netlist.count(ElementKind::L);
    const int nV = netlist.count(ElementKind::V);
    const Index dim = n + nL + nV;
    int ports = 0;
    for (const Element& e : netlist.elements) {
        if (e.kind == ElementKind::M) {
            ports += e.ports();
        }
    }
    if (device.inputs() != ports || device.outputs() != ports) {
        throw Error(ErrorKind::DimensionMismatch,
                    "device has " + std::to_string(device.inputs()) + " inputs and " +
                        std::to_string(device.outputs()) + " outputs, netlist has " +
                        std::to_string(ports) + " ports");
    }

    Matrix mass = Matrix::Zero(dim, dim);
    Matrix G = Matrix::Zero(n, n);
    Matrix AL = Matrix::Zero(n, nL);
    Matrix AV = Matrix::Zero(n, nV);
    Matrix AM = Matrix::Zero(dim, ports);
    std::vector<DiodeBranch> diodes;
    std::vector<SineSource> sources;
    Index il = 0;
    Index iv = 0;
    Index ip = 0;
    for (const Element& e : netlist.elements) {
        const int np = e.nodes[0];
        const int nm = e.nodes[1];
        switch (e.kind) {
            case ElementKind::R:
            case ElementKind::C: {
                Matrix a = Matrix::Zero(n, 1);
                stamp_incidence(a, 0, np, nm);
                if (e.kind == ElementKind::R) {
                    G += (1.0 / e.value) * a * a.transpose();
                } else {
                    mass.topLeftCorner(n, n) += e.value * a * a.transpose();
                }
                break;
            }
            case ElementKind::L:
                stamp_incidence(AL, il, np, nm);
                mass(n + il, n + il) = e.value;
                ++il;
                break;
            case ElementKind::V:
                stamp_incidence(AV, iv, np, nm);
                sources.push_back({e.amplitude, e.omega});
                ++iv;
                break;
            case ElementKind::D: {
                Shockley law = e.diode;
                if (!e.diode_offset_given && opts.diode_offset) {
                    law.offset = *opts.diode_offset;
                }
                diodes.push_back({np, nm, law});
                break;
            }
            case ElementKind::M:
                for (std::size_t k = 0; k < e.nodes.size(); k += 2) {
                    stamp_incidence(AM, ip++, e.nodes[k], e.nodes[k + 1]);
                }
                break;
        }
    }

    // Constant part of dF/dy.
    Matrix J0 = Matrix::Zero(dim, dim);
    J0.topLeftCorner(n, n) = G;
    J0.block(0, n, n, nL) = AL;
    J0.block(0, n + nL, n, nV) = AV;
    J0.block(n, 0, nL, n) = -AL.transpose();
    J0.block(n + nL, 0, nV, n) = AV.transpose();

    MnaModel model;
    model.device = device;
    model.A_M = AM;
    model.n_nodes = n;
    model.n_inductors = nL;
    model.n_sources = nV;
    model.node_names = netlist.node_names;

    NonlinearSubsystem& nl = model.nl;
    nl.dim_y = dim;
    nl.mass = [mass](const Vector&) { return mass; };
    nl.jac_mass_dir = [dim](const Vector&, const Vector&) { return Matrix(Matrix::Zero(dim, dim)); };
    nl.force = [J0, diodes, sources, n, nL, nV](const Vector& y, double t) {
        Vector f = J0 * y;
        const Vector u = y.head(n);
        for (const DiodeBranch& d : diodes) {
            const double j = d.law.current(branch_voltage(u, d.np, d.nm));
            if (d.np > 0) {
                f(d.np - 1) += j;
            }
            if (d.nm > 0) {
                f(d.nm - 1) -= j;
            }
        }
        for (int k = 0; k < nV; ++k) {
            const SineSource& s = sources[static_cast<std::size_t>(k)];
            f(n + nL + k) -= s.amplitude * std::sin(s.omega * t);
        }
        return f;
    };
    nl.jac_force = [J0, diodes, n](const Vector& y, double) {
        Matrix J = J0;
        const Vector u = y.head(n);
        for (const DiodeBranch& d : diodes) {
            const double g = d.law.derivative(branch_voltage(u, d.np, d.nm));
            const int idx[2] = {d.np, d.nm};
            const double sign[2] = {1.0, -1.0};
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) {
                    if (idx[a] > 0 && idx[b] > 0) {
                        J(idx[a] - 1, idx[b] - 1) += sign[a] * sign[b] * g;
                    }
                }
            }
        }
        return J;
    };
    nl.couple_in = -AM;
    nl.port_select = AM.transpose();
    nl.validate();
    return model;
}

MnaModel build_mna(const Netlist& netlist, const MnaOptions& opts) {
    std::vector<DescriptorSystem> devices;
    for (const Element& e : netlist.elements) {
        if (e.kind != ElementKind::M) {
            continue;
        }
        DescriptorSystem d = resolve_device_model(e.model, netlist.base_dir);
        if (d.inputs() != e.ports() || d.outputs() != e.ports()) {
            throw Error(ErrorKind::DimensionMismatch,
                        e.name + ": model '" + e.model + "' has " + std::to_string(d.inputs()) +
                            " ports, element connects " + std::to_string(e.ports()));
        }
        devices.push_back(std::move(d));
    }
    DescriptorSystem device;
    if (devices.empty()) {
        device.E = device.A = Matrix(0, 0);
        device.B = device.C = Matrix(0, 0);
    } else {
        device = block_diagonal(devices);
    }
    return build_mna(netlist, device, opts);
}

std::string model_problem_netlist(const std::string& model) {
    return "V1 1 0 sin 1 4.712388980384690\n"
           "M1 1 0 model=" + model + "\n";
}

std::string rectifier_netlist(const std::string& model) {
    return "V1 1 0 sin 250 15.707963267948966\n"
           "M1 1 0 0 2 model=" + model + "\n"
           "C1 2 0 1e-12\n"
           "D1 2 3 2.5e-6 4\n"
           "R1 3 0 10000\n";
}

}  // namespace cqsim
