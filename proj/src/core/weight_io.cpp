#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "cqsim/cq_weights.hpp"

namespace cqsim {

void write_weights(std::ostream& out, const CQWeightTable& table) {
    out << "CQW kind=" << (table.kind == SchemeKind::Bdf ? "bdf" : "rk")
        << " m_or_s=" << table.order << " p=" << table.p << " q=" << table.q
        << " N=" << table.N << std::setprecision(17) << " tau=" << table.tau
        << " rho=" << table.rho << " L=" << table.L << "\n";
    for (const Matrix& w : table.weights) {
        bool first = true;
        for (Index i = 0; i < w.rows(); ++i) {
            for (Index j = 0; j < w.cols(); ++j) {
                out << (first ? "" : " ") << w(i, j);
                first = false;
            }
        }
        out << "\n";
    }
}

CQWeightTable read_weights(std::istream& in, const std::string& source_name) {
    auto fail = [&](int line, const std::string& msg) -> Error {
        return Error(ErrorKind::Parse, source_name + ":" + std::to_string(line) + ": " + msg);
    };
    std::string header;
    if (!std::getline(in, header)) {
        throw fail(1, "empty weight file");
    }
    std::istringstream hs(header);
    std::string magic;
    hs >> magic;
    if (magic != "CQW") {
        throw fail(1, "missing CQW header");
    }
    std::map<std::string, std::string> fields;
    std::string token;
    while (hs >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) {
            throw fail(1, "malformed header field '" + token + "'");
        }
        fields[token.substr(0, eq)] = token.substr(eq + 1);
    }
    CQWeightTable t;
    try {
        const std::string& kind = fields.at("kind");
        if (kind == "bdf") {
            t.kind = SchemeKind::Bdf;
        } else if (kind == "rk") {
            t.kind = SchemeKind::Rk;
        } else {
            throw fail(1, "unknown kind '" + kind + "'");
        }
        t.order = std::stoi(fields.at("m_or_s"));
        t.p = std::stol(fields.at("p"));
        t.q = std::stol(fields.at("q"));
        t.N = std::stoi(fields.at("N"));
        t.tau = std::stod(fields.at("tau"));
        t.rho = std::stod(fields.at("rho"));
        t.L = std::stoi(fields.at("L"));
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        throw fail(1, "incomplete or malformed header");
    }
    if (t.order < 1 || t.p < 1 || t.q < 1 || t.N < 1) {
        throw fail(1, "header dimensions must be positive");
    }
    const int count = t.kind == SchemeKind::Bdf ? t.N + 1 : t.N;
    const Index rows = t.rows();
    const Index cols = t.cols();
    std::string line;
    for (int n = 0; n < count; ++n) {
        if (!std::getline(in, line)) {
            throw fail(n + 2, "expected " + std::to_string(count) + " weight lines");
        }
        std::istringstream ls(line);
        Matrix w(rows, cols);
        for (Index i = 0; i < rows; ++i) {
            for (Index j = 0; j < cols; ++j) {
                if (!(ls >> w(i, j))) {
                    throw fail(n + 2, "expected " + std::to_string(rows * cols) + " entries");
                }
            }
        }
        std::string extra;
        if (ls >> extra) {
            throw fail(n + 2, "trailing entries");
        }
        t.weights.push_back(std::move(w));
    }
    return t;
}

void save_weights(const std::string& path, const CQWeightTable& table) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write weight file " + path);
    }
    write_weights(out, table);
}

CQWeightTable load_weights(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open weight file " + path);
    }
    return read_weights(in, path);
}

}  // namespace cqsim
