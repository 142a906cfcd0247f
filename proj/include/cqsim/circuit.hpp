#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cqsim/lti.hpp"
#include "cqsim/nonlinear.hpp"

namespace cqsim {

enum class ElementKind { R, C, L, V, D, M };

/// j(v) = Is (exp(k v) + offset), dj/dv = Is k exp(k v). Arguments k v above
/// 700 raise Overflow.
struct Shockley {
    double Is = 2.5e-6;
    double k = 4.0;
    double offset = 1.0;

    double current(double v) const;
    double derivative(double v) const;
};

inline constexpr double kShockleyExponentLimit = 700.0;

struct Element {
    ElementKind kind = ElementKind::R;
    std::string name;
    /// Node indices, 0 is ground. Two per port for M elements.
    std::vector<int> nodes;
    double value = 0.0;  // R, C, L
    double amplitude = 0.0;
    double omega = 0.0;  // V: amplitude sin(omega t)
    Shockley diode;      // D
    bool diode_offset_given = false;
    std::string model;   // M
    int line = 0;

    int ports() const { return static_cast<int>(nodes.size()) / 2; }
};

struct Netlist {
    std::vector<std::string> node_names;  // index i-1 holds node i
    std::vector<Element> elements;
    std::filesystem::path base_dir = ".";

    int nodes() const { return static_cast<int>(node_names.size()); }
    int count(ElementKind kind) const;
};

/// Line format, `#` comments, node `0` is ground:
///   R|C|L name n+ n- value
///   V name n+ n- sin amp omega
///   D name n+ n- Is k [offset]
///   M name n1+ n1- [n2+ n2-] model=<manifest|synthetic[:preset]>
///   .nodes n1 n2 ...   (optional; then every element node must be declared)
/// The element kind is the first letter of the element name.
Netlist parse_netlist(const std::string& text, const std::string& source = "<netlist>",
                      const std::filesystem::path& base_dir = ".");
Netlist load_netlist(const std::filesystem::path& path);

struct MnaOptions {
    /// Overrides the offset of every diode that does not set one explicitly.
    std::optional<double> diode_offset;
};

/// Nonlinear MNA subsystem with unknowns y = (u, j_L, j_V) and the EM ports
/// coupled through couple_in = -A_M, port_select = A_M^T.
struct MnaModel {
    NonlinearSubsystem nl;
    DescriptorSystem device;  // port-level, block diagonal over M elements
    Matrix A_M;               // dim_y x ports (zero below the node rows)
    int n_nodes = 0;
    int n_inductors = 0;
    int n_sources = 0;
    std::vector<std::string> node_names;

    Index dim_y() const { return nl.dim_y; }
    Index ports() const { return A_M.cols(); }
};

/// Resolves each M element's model relative to the netlist directory.
MnaModel build_mna(const Netlist& netlist, const MnaOptions& opts = {});

/// Uses `device` as the port-level linear subsystem of all M elements.
/// Throws DimensionMismatch when its port count differs.
MnaModel build_mna(const Netlist& netlist, const DescriptorSystem& device,
                   const MnaOptions& opts = {});

/// Single node driven by sin(3/2 pi t) and loaded by the eddy surrogate.
std::string model_problem_netlist(const std::string& model = "synthetic");

/// Half-wave rectifier: source, two-port transformer, C = 1e-12, diode,
/// R = 10000, V(t) = 250 sin(5 pi t).
std::string rectifier_netlist(const std::string& model = "synthetic:transformer");

}  // namespace cqsim
