#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>

#include "bundle_files.hpp"
#include "mewfit/io.hpp"
#include "mewfit/report.hpp"

using namespace mewfit;
using testing_support::TempDir;

namespace {

RawDataset csv(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in);
}

int parse_error_line(const std::string& text) {
  try {
    csv(text);
  } catch (const ParseError& e) {
    return static_cast<int>(e.line());
  }
  return -1;
}

PgmImage pgm(const std::string& bytes) {
  std::istringstream in(bytes);
  return read_pgm(in);
}

}  // namespace

TEST(Csv, PlainRows) {
  const auto d = csv("0,5.9\n0.9, 5.4\n1.8 ,4.4\n");
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.x()[1], 0.9);
  EXPECT_EQ(d.y()[2], 4.4);
}

TEST(Csv, HeaderCommentsAndBlankLines) {
  const auto d = csv("# Pearson sample\nX,Y\n\n0,1\r\n# mid comment\n2,3\n+4,-5e-1\n");
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.x()[2], 4.0);
  EXPECT_EQ(d.y()[2], -0.5);
}

TEST(Csv, ErrorsCarryLineNumbers) {
  EXPECT_EQ(parse_error_line("X,Y\n1,2\n3,abc\n"), 3);
  EXPECT_EQ(parse_error_line("1,2\n3\n"), 2);
  EXPECT_EQ(parse_error_line("1,2\n3,4,5\n"), 2);
  EXPECT_EQ(parse_error_line("# c\n1,2\nX,Y\n"), 3);
  EXPECT_EQ(parse_error_line("1,nan\n2,3\n4,5\n"), 1);
  EXPECT_EQ(parse_error_line("1,2\n2,1e999\n"), 2);
  EXPECT_EQ(parse_error_line("1,2\n3,4 5\n"), 2);
  try {
    csv("1,2\nfoo,3\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Csv, TooFewRows) {
  EXPECT_THROW(csv(""), InvalidInput);
  EXPECT_THROW(csv("X,Y\n1,2\n"), InvalidInput);
}

TEST(Csv, FileErrorsNameTheFile) {
  TempDir tmp;
  const auto path = (tmp / "bad.csv").string();
  std::ofstream(path) << "1,2\n3,x\n";
  try {
    read_csv_file(path);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(std::string(e.what()), path + ":2: not a finite number: 'x'");
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(read_csv_file((tmp / "missing.csv").string()), InvalidInput);
}

TEST(Csv, WriteReadRoundTripIsExact) {
  Rng rng(1);
  std::vector<double> x, y;
  for (int i = 0; i < 50; ++i) {
    x.push_back(std::ldexp(rng.uniform(), static_cast<int>(rng.below(80)) - 40));
    y.push_back(-rng.normal() * 1e-7);
  }
  const RawDataset d(x, y);
  std::stringstream ss;
  write_csv(ss, d);
  const auto back = read_csv(ss);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back.x()[i], d.x()[i]);
    EXPECT_EQ(back.y()[i], d.y()[i]);
  }
}

TEST(Fmt, SeventeenDigits) {
  EXPECT_EQ(fmt(0.1), "0.10000000000000001");
  EXPECT_EQ(fmt(1.0), "1");
  EXPECT_EQ(fmt(-2.5e-300), "-2.5e-300");
  EXPECT_EQ(fmt(INFINITY), "inf");
  EXPECT_EQ(fmt(NAN), "nan");
  EXPECT_EQ(std::strtod(fmt(M_PI).c_str(), nullptr), M_PI);
}

TEST(Pgm, AsciiWithComments) {
  const auto p = pgm("P2\n# made by hand\n3 2 # width height\n255\n0 51 102\n153 204 255\n");
  EXPECT_EQ(p.format, PgmFormat::ascii);
  ASSERT_EQ(p.image.rows(), 2u);
  ASSERT_EQ(p.image.cols(), 3u);
  EXPECT_EQ(p.image(0, 1), 51.0 / 255.0);
  EXPECT_EQ(p.image(1, 2), 1.0);
}

TEST(Pgm, BinaryRoundTrip) {
  const auto img = quantize(synthetic_image(17, 23));
  for (auto format : {PgmFormat::binary, PgmFormat::ascii}) {
    std::stringstream ss;
    write_pgm(ss, img, format);
    const auto back = read_pgm(ss);
    EXPECT_EQ(back.format, format);
    EXPECT_EQ(back.image, img);
  }
}

TEST(Pgm, GrayMapping) {
  EXPECT_EQ(to_gray(0.0), 0);
  EXPECT_EQ(to_gray(1.0), 255);
  EXPECT_EQ(to_gray(1.7), 255);
  EXPECT_EQ(to_gray(-0.2), 0);
  EXPECT_EQ(to_gray(0.5), 128);
  for (int g = 0; g < 256; ++g) EXPECT_EQ(to_gray(g / 255.0), g);
}

TEST(Pgm, Rejections) {
  EXPECT_THROW(pgm("P3\n1 1\n255\n0 0 0\n"), InvalidInput);
  EXPECT_THROW(pgm("P2\n2 2\n65535\n0 0 0 0\n"), InvalidInput);
  EXPECT_THROW(pgm("P2\n2 2\n15\n0 0 0 0\n"), InvalidInput);
  EXPECT_THROW(pgm("P2\n2 2\n255\n0 0 0\n"), InvalidInput);
  EXPECT_THROW(pgm("P2\n2 2\n255\n0 0 0 256\n"), InvalidInput);
  EXPECT_THROW(pgm("P5\n2 2\n255\nabc"), InvalidInput);
  EXPECT_THROW(pgm("P2\n0 2\n255\n"), InvalidInput);
  EXPECT_THROW(pgm("P2\nx 2\n255\n"), InvalidInput);
}

TEST(Manifest, LayoutIsolatesTimestamp) {
  RunManifest m;
  m.subcommand = "fit";
  m.inputs.push_back("data.csv");
  m.seed = 7;
  m.set("degree", 1);
  m.set("reduce", 100.0);
  m.set("cap-beta", true);
  m.set("sweep", std::string("rows"));
  std::ostringstream out;
  write_manifest(out, m);
  const auto text = out.str();
  EXPECT_EQ(testing_support::drop_timestamp(text),
            "mewfit-report: 0.1.0\nsubcommand: fit\ninput: data.csv\nseed: 7\ndegree: 1\nreduce: 100\n"
            "cap-beta: true\nsweep: rows\n\n");
  const auto ts = text.find("timestamp: ");
  ASSERT_NE(ts, std::string::npos);
  EXPECT_EQ(text.substr(text.size() - 2), "\n\n");
}

TEST(Manifest, ScenarioCarriesResolvedConfig) {
  const auto m = scenario_manifest(default_scenario(ScenarioName::legendre_signal));
  std::map<std::string, std::string> kv(m.config.begin(), m.config.end());
  EXPECT_EQ(kv["scenario"], "legendre-signal");
  EXPECT_EQ(kv["degree"], "7");
  EXPECT_EQ(kv["reduce"], "1000000");
  EXPECT_EQ(kv["stages"], "12");
  EXPECT_EQ(*m.seed, 7u);
  const auto im = scenario_manifest(default_scenario(ScenarioName::image_denoise));
  std::map<std::string, std::string> ikv(im.config.begin(), im.config.end());
  EXPECT_EQ(ikv["inject"], "0.14999999999999999,0.5,7");
  EXPECT_EQ(ikv["schedule"], "2,5,10,20");
  EXPECT_EQ(ikv["sweep"], "alternating");
}

TEST(Bundle, CurveFilesAndColumns) {
  TempDir tmp;
  const auto r = run(default_scenario(ScenarioName::parabola_outliers));
  write_bundle(tmp.path(), r);
  const auto files = testing_support::bundle_files(tmp.path());
  ASSERT_EQ(files.size(), 4u);
  EXPECT_EQ(files.at("weights.csv").substr(0, 31), "i,X,Y,x,y,e,p,outlier,e_uw\n1,0,");
  EXPECT_EQ(files.at("trace.csv").substr(0, 17), "stage,r,mse,H,bet");
  EXPECT_EQ(files.at("history.csv").substr(0, 22), "r,ok,mse,H,beta,p1,p2,");
  const auto& report = files.at("report.txt");
  EXPECT_NE(report.find("\nscenario: parabola-outliers\n"), std::string::npos);
  EXPECT_NE(report.find("\noutlier-indices: 5\n"), std::string::npos);
  EXPECT_NE(report.find("\nstatus: converged\n"), std::string::npos);
  // weights.csv lines: header + 20 rows
  EXPECT_EQ(std::count(files.at("weights.csv").begin(), files.at("weights.csv").end(), '\n'), 21);
}

TEST(Bundle, CurveReportIsDeterministic) {
  TempDir a, b;
  write_bundle(a.path(), run(default_scenario(ScenarioName::hidden_line)));
  write_bundle(b.path(), run(default_scenario(ScenarioName::hidden_line)));
  EXPECT_EQ(testing_support::bundle_files(a.path()), testing_support::bundle_files(b.path()));
}

TEST(Bundle, ImageFiles) {
  TempDir tmp;
  auto s = default_scenario(ScenarioName::image_denoise);
  s.image_rows = 20;
  s.image_cols = 40;
  const auto r = run(s);
  write_bundle(tmp.path(), r);
  const auto files = testing_support::bundle_files(tmp.path());
  for (const char* name : {"report.txt", "metrics.csv", "flags.csv", "clean.pgm", "flags.pgm", "noisy.pgm", "truth.pgm"}) {
    EXPECT_EQ(files.count(name), 1u) << name;
  }
  EXPECT_NE(files.at("report.txt").find("\npsnr-gain: "), std::string::npos);
  EXPECT_NE(files.at("report.txt").find("\nfalse-positive-rate: "), std::string::npos);
  const auto clean = read_pgm_file((tmp / "clean.pgm").string());
  EXPECT_EQ(clean.format, PgmFormat::binary);
  EXPECT_EQ(clean.image.rows(), 20u);
  EXPECT_EQ(clean.image.cols(), 40u);
  EXPECT_EQ(clean.image, quantize(std::get<ImageReport>(r.body).result.clean));
}
