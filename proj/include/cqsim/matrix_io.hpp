#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "cqsim/lti.hpp"

namespace cqsim {

// Coordinate text format:
//   # comment
//   nrows ncols nnz
//   i j value        (nnz lines, 1-based; duplicates are summed)

Matrix parse_matrix(std::istream& in, const std::string& source_name = "<stream>");
Matrix load_matrix(const std::filesystem::path& path);

void write_matrix(std::ostream& out, const Matrix& m);
void save_matrix(const std::filesystem::path& path, const Matrix& m);

/// Loads a descriptor bundle. A file is read as a manifest with lines
/// `E=<path>`, `A=<path>`, `B=<path>`, `C=<path>` (relative paths resolve
/// against the manifest's directory). A directory is read as containing a
/// `manifest` file.
DescriptorSystem load_descriptor(const std::filesystem::path& path);

/// Writes E.mtx, A.mtx, B.mtx, C.mtx and a `manifest` into dir.
void save_descriptor(const std::filesystem::path& dir, const DescriptorSystem& sys);

}  // namespace cqsim
