#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cqsim/matrix_io.hpp"

using namespace cqsim;

namespace {

Matrix parse(const std::string& text) {
    std::istringstream in(text);
    return parse_matrix(in, "test");
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("cqsim_unit_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST(MatrixIo, IdentityFromCoordinates) {
    const Matrix m = parse("2 2 2\n1 1 1.0\n2 2 1.0\n");
    EXPECT_EQ(m, Matrix::Identity(2, 2));
}

TEST(MatrixIo, DuplicatesAreSummed) {
    const Matrix m = parse("# assembled\n1 2 3\n1 1 0.25\n1 1 0.5   # again\n1 2 -2\n");
    EXPECT_DOUBLE_EQ(m(0, 0), 0.75);
    EXPECT_DOUBLE_EQ(m(0, 1), -2.0);
}

TEST(MatrixIo, ParseErrorsCarryLineNumbers) {
    try {
        parse("2 2 1\n\n-1 1 1.0\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
        EXPECT_NE(std::string(e.what()).find("test:3"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse("2 2 2\n1 1 1.0\n"), Error);      // too few entries
    EXPECT_THROW(parse("2 2 1\n3 1 1.0\n"), Error);      // out of range
    EXPECT_THROW(parse("2 2 1\n1 1 abc\n"), Error);
    EXPECT_THROW(parse("# only a comment\n"), Error);
}

TEST(MatrixIo, WriteReadRoundTripIsExact) {
    Matrix m(3, 2);
    m << 1.0 / 3.0, 0.0, -2.5e-17, 4.0, 0.0, 1e300;
    std::stringstream io;
    write_matrix(io, m);
    EXPECT_EQ(parse_matrix(io), m);
}

TEST(MatrixIo, DescriptorManifest) {
    const auto dir = scratch_dir("descriptor");
    DescriptorSystem sys;
    sys.E = Matrix::Identity(2, 2);
    sys.A = Matrix::Constant(2, 2, 0.5) + Matrix::Identity(2, 2);
    sys.B = Matrix::Ones(2, 1);
    sys.C = Matrix::Ones(2, 1);
    save_descriptor(dir, sys);
    const auto back = load_descriptor(dir);
    EXPECT_EQ(back.E, sys.E);
    EXPECT_EQ(back.A, sys.A);
    const auto via_file = load_descriptor(dir / "manifest");
    EXPECT_EQ(via_file.B, sys.B);

    std::ofstream(dir / "bad_manifest") << "E=E.mtx\nA=A.mtx\nB=B.mtx\n";
    EXPECT_THROW(load_descriptor(dir / "bad_manifest"), Error);
    EXPECT_THROW(load_matrix(dir / "missing.mtx"), Error);
}
