#include "cqsim/matrix_io.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace cqsim {

namespace {

std::string strip_comment(const std::string& line) {
    const auto pos = line.find('#');
    return pos == std::string::npos ? line : line.substr(0, pos);
}

bool blank(const std::string& s) {
    return s.find_first_not_of(" \t\r") == std::string::npos;
}

[[noreturn]] void parse_fail(const std::string& source, int line, const std::string& msg) {
    throw Error(ErrorKind::Parse, source + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

Matrix parse_matrix(std::istream& in, const std::string& source_name) {
    std::string raw;
    int line_no = 0;
    bool have_header = false;
    long long rows = 0, cols = 0, nnz = 0, seen = 0;
    Matrix m;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = strip_comment(raw);
        if (blank(line)) {
            continue;
        }
        std::istringstream ls(line);
        if (!have_header) {
            if (!(ls >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) {
                parse_fail(source_name, line_no, "expected header 'nrows ncols nnz'");
            }
            std::string extra;
            if (ls >> extra) {
                parse_fail(source_name, line_no, "trailing token '" + extra + "' in header");
            }
            m = Matrix::Zero(rows, cols);
            have_header = true;
            continue;
        }
        long long i = 0, j = 0;
        double v = 0.0;
        if (!(ls >> i >> j >> v)) {
            parse_fail(source_name, line_no, "expected entry 'i j value'");
        }
        std::string extra;
        if (ls >> extra) {
            parse_fail(source_name, line_no, "trailing token '" + extra + "'");
        }
        if (i < 1 || j < 1 || i > rows || j > cols) {
            parse_fail(source_name, line_no,
                       "index (" + std::to_string(i) + "," + std::to_string(j) +
                           ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
        }
        if (++seen > nnz) {
            parse_fail(source_name, line_no,
                       "more entries than the " + std::to_string(nnz) + " declared");
        }
        m(i - 1, j - 1) += v;
    }
    if (!have_header) {
        parse_fail(source_name, line_no, "missing header");
    }
    if (seen != nnz) {
        parse_fail(source_name, line_no,
                   "header declares " + std::to_string(nnz) + " entries, found " +
                       std::to_string(seen));
    }
    return m;
}

Matrix load_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open matrix file " + path.string());
    }
    return parse_matrix(in, path.string());
}

void write_matrix(std::ostream& out, const Matrix& m) {
    long long nnz = 0;
    for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < m.rows(); ++i) {
            nnz += m(i, j) != 0.0;
        }
    }
    out << m.rows() << " " << m.cols() << " " << nnz << "\n";
    out << std::setprecision(17);
    for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < m.rows(); ++i) {
            if (m(i, j) != 0.0) {
                out << i + 1 << " " << j + 1 << " " << m(i, j) << "\n";
            }
        }
    }
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write matrix file " + path.string());
    }
    write_matrix(out, m);
}

DescriptorSystem load_descriptor(const std::filesystem::path& path) {
    std::filesystem::path manifest = path;
    if (std::filesystem::is_directory(path)) {
        manifest = path / "manifest";
    }
    std::ifstream in(manifest);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open descriptor manifest " + manifest.string());
    }
    const auto base = manifest.parent_path();
    std::map<std::string, std::filesystem::path> entries;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            parse_fail(manifest.string(), line_no, "expected KEY=path");
        }
        const std::string key = trim(line.substr(0, eq));
        std::filesystem::path file = trim(line.substr(eq + 1));
        if (key != "E" && key != "A" && key != "B" && key != "C") {
            parse_fail(manifest.string(), line_no, "unknown key '" + key + "'");
        }
        if (file.is_relative()) {
            file = base / file;
        }
        entries[key] = file;
    }
    for (const char* key : {"E", "A", "B", "C"}) {
        if (!entries.count(key)) {
            throw Error(ErrorKind::Parse,
                        manifest.string() + ": missing entry " + std::string(key));
        }
    }
    DescriptorSystem sys{load_matrix(entries["E"]), load_matrix(entries["A"]),
                         load_matrix(entries["B"]), load_matrix(entries["C"])};
    sys.validate();
    return sys;
}

void save_descriptor(const std::filesystem::path& dir, const DescriptorSystem& sys) {
    std::filesystem::create_directories(dir);
    save_matrix(dir / "E.mtx", sys.E);
    save_matrix(dir / "A.mtx", sys.A);
    save_matrix(dir / "B.mtx", sys.B);
    save_matrix(dir / "C.mtx", sys.C);
    std::ofstream out(dir / "manifest");
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write manifest in " + dir.string());
    }
    out << "E=E.mtx\nA=A.mtx\nB=B.mtx\nC=C.mtx\n";
}

}  // namespace cqsim
