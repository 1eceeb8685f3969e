#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "convnet/errors.hpp"
#include "convnet/tensor_io.hpp"

using namespace convnet;

namespace {

struct TempPath {
    std::string path;
    explicit TempPath(const std::string& name) : path("tio_" + name) {}
    ~TempPath() { std::remove(path.c_str()); }
};

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return false;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

} // namespace

TEST_CASE("single tensor record round-trips bit-exactly") {
    Tensor t({2, 3}, {1.5, -0.25, 1e-300, 3.141592653589793, 0.0, -7.0});
    std::stringstream buf;
    write_tensor(buf, t);
    Tensor back = read_tensor(buf);
    CHECK(bitwise_equal(t, back));
}

TEST_CASE("tensor record rejects truncated and garbage input") {
    Tensor t({4}, {1, 2, 3, 4});
    std::stringstream buf;
    write_tensor(buf, t);
    std::string bytes = buf.str();

    std::stringstream cut(bytes.substr(0, bytes.size() - 5));
    CHECK_THROWS_AS(read_tensor(cut), data_error);

    std::stringstream wrong("not a tensor record at all, definitely");
    CHECK_THROWS_AS(read_tensor(wrong), data_error);
}

TEST_CASE("container preserves meta and tensor order and values") {
    TensorFile f;
    f.put_meta("what", "checkpoint");
    f.put_meta("epoch", "17");
    f.put_tensor("weights", Tensor({2, 2}, {1, 2, 3, 4}));
    f.put_tensor("biases", Tensor({2}, {0.5, -0.5}));

    TempPath tmp("container.tnsc");
    f.save(tmp.path);
    TensorFile g = TensorFile::load(tmp.path);

    REQUIRE(g.all_meta().size() == 2);
    CHECK(g.all_meta()[0].first == "what");
    CHECK(g.all_meta()[1].first == "epoch");
    CHECK(g.meta("what") == "checkpoint");
    CHECK(g.meta("epoch") == "17");

    REQUIRE(g.all_tensors().size() == 2);
    CHECK(g.all_tensors()[0].first == "weights");
    CHECK(g.all_tensors()[1].first == "biases");
    CHECK(bitwise_equal(g.tensor("weights"), f.tensor("weights")));
    CHECK(bitwise_equal(g.tensor("biases"), f.tensor("biases")));
}

TEST_CASE("container lookups throw data_error naming the missing key") {
    TensorFile f;
    f.put_meta("present", "yes");
    CHECK(f.has_meta("present"));
    CHECK_FALSE(f.has_meta("absent"));
    CHECK_FALSE(f.has_tensor("absent"));

    try {
        (void)f.meta("absent");
        FAIL("expected data_error");
    } catch (const data_error& e) {
        CHECK(std::string(e.what()).find("absent") != std::string::npos);
    }
    CHECK_THROWS_AS((void)f.tensor("absent"), data_error);
}

TEST_CASE("container load rejects a non-container file") {
    TempPath tmp("garbage.tnsc");
    {
        std::FILE* fp = std::fopen(tmp.path.c_str(), "wb");
        REQUIRE(fp != nullptr);
        std::fputs("junk bytes", fp);
        std::fclose(fp);
    }
    CHECK_THROWS_AS(TensorFile::load(tmp.path), data_error);
    CHECK_THROWS_AS(TensorFile::load("no_such_file.tnsc"), data_error);
}

TEST_CASE("format_double round-trips every kind of value bit-exactly") {
    std::vector<double> cases = {
        0.0,
        -0.0,
        1.0,
        -1.0,
        0.1,
        1.0 / 3.0,
        3.141592653589793,
        -2.718281828459045,
        1e-300,
        -1e300,
        5e-324,                                       // smallest subnormal
        std::numeric_limits<double>::denorm_min(),
        std::numeric_limits<double>::max(),
        std::numeric_limits<double>::min(),
        123456789.123456789,
        0.17,
        0.0017,
    };
    for (double v : cases) {
        double back = parse_double(format_double(v));
        CHECK(std::memcmp(&back, &v, sizeof(double)) == 0);
    }
}

TEST_CASE("format_double prints integers without noise") {
    CHECK(format_double(2.0) == "2");
    CHECK(format_double(-3.0) == "-3");
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("parse_double rejects text that is not a number") {
    CHECK_THROWS_AS(parse_double("banana"), data_error);
    CHECK_THROWS_AS(parse_double(""), data_error);
    CHECK_THROWS_AS(parse_double("1.5x"), data_error);
}
