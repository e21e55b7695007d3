#include <filesystem>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "kdc/io.hpp"

using namespace kdc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "kdc_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

Matrix random_weights(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) m(i, j) = m(j, i) = u(rng);
  }
  return m;
}

}  // namespace

TEST(MatrixCsv, ParsesSquareInput) {
  std::istringstream in("1,0.5\n0.5, 1\n");
  const Matrix m = io::matrix_from_csv(in);
  ASSERT_EQ(m.rows(), 2);
  EXPECT_DOUBLE_EQ(m(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(m(1, 1), 1.0);
}

TEST(MatrixCsv, RaggedOrGarbageInputIsAParseError) {
  std::istringstream ragged("1,0\n0\n");
  EXPECT_THROW(io::matrix_from_csv(ragged), ParseError);
  std::istringstream garbage("1,x\n0,1\n");
  EXPECT_THROW(io::matrix_from_csv(garbage), ParseError);
  std::istringstream empty_cell("1,,0\n");
  EXPECT_THROW(io::matrix_from_csv(empty_cell), ParseError);
}

TEST(MatrixCsv, RoundTripIsExact) {
  const Matrix m = random_weights(13, 1);
  std::istringstream in(io::matrix_to_csv(m));
  EXPECT_EQ(io::matrix_from_csv(in), m);
}

TEST(MatrixBinary, RoundTripIsBitExact) {
  const Matrix m = random_weights(21, 2);
  EXPECT_EQ(io::matrix_from_binary(io::matrix_to_binary(m)), m);
}

TEST(MatrixBinary, TruncatedInputIsAParseError) {
  std::string bytes = io::matrix_to_binary(random_weights(4, 3));
  bytes.pop_back();
  EXPECT_THROW(io::matrix_from_binary(bytes), ParseError);
  EXPECT_THROW(io::matrix_from_binary("abc"), ParseError);
}

TEST(MatrixFiles, FormatFollowsExtension) {
  const Matrix m = random_weights(6, 4);
  for (const char* name : {"w.csv", "w.bin"}) {
    const fs::path path = scratch(name);
    io::write_matrix(path, m, io::format_from_path(path));
    EXPECT_EQ(io::read_matrix(path), m);
  }
}

TEST(MatrixFiles, ReadingInvalidWeightsIsRejected) {
  const fs::path path = scratch("bad.csv");
  io::write_file(path, "1,2\n2,1\n");
  EXPECT_THROW(io::read_weight_matrix(path), ValidationError);
  io::write_file(path, "1,0.2\n0.3,1\n");
  EXPECT_THROW(io::read_weight_matrix(path), ValidationError);
}

TEST(MatrixFiles, MissingFileIsAParseError) {
  EXPECT_THROW(io::read_matrix(scratch("does_not_exist.csv")), ParseError);
}

TEST(MatrixFiles, UnwritablePathIsAWriteError) {
  EXPECT_THROW(io::write_file("/nonexistent_dir/x.csv", "1\n"), io::WriteError);
}

TEST(PartitionJson, UsesOneBasedIndices) {
  const Partition p({{0, 1}, {2, 3}}, {4}, 5);
  const auto j = io::partition_to_json(p);
  EXPECT_EQ(j.at("clusters").dump(), "[[1,2],[3,4]]");
  EXPECT_EQ(j.at("outliers").dump(), "[5]");
  EXPECT_EQ(io::partition_from_json(j), p);
}

TEST(PartitionJson, FileRoundTrip) {
  const Partition p = Partition::from_sizes(std::vector<Index>{3, 4, 2}, 12);
  const fs::path path = scratch("p.json");
  io::write_partition(path, p);
  EXPECT_EQ(io::read_partition(path), p);
}

TEST(PartitionJson, MalformedInputIsAParseError) {
  const fs::path path = scratch("bad.json");
  io::write_file(path, "{\"clusters\": [[1, 2]");
  EXPECT_THROW(io::read_partition(path), ParseError);
  EXPECT_THROW(io::partition_from_json(nlohmann::json::parse(R"({"outliers": [1]})")),
               ParseError);
  EXPECT_THROW(io::partition_from_json(nlohmann::json::parse(R"({"clusters": [["a"]]})")),
               ParseError);
}

TEST(PartitionJson, InconsistentSetsAreAValidationError) {
  EXPECT_THROW(io::partition_from_json(nlohmann::json::parse(R"({"clusters": [[1,2],[2,3]]})")),
               ValidationError);
}
