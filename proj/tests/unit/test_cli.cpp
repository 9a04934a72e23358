#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>

#include "test_support.hpp"

#ifndef STAYINSIGHT_CLI_PATH
#error "STAYINSIGHT_CLI_PATH must name the CLI binary"
#endif

namespace ts = testsupport;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run_cli(const std::string& args) {
  static const auto cache = ts::scratch_dir("cli");
  const std::string cmd = std::string(STAYINSIGHT_CLI_PATH) + " --cache-dir " + cache.string() + " --fixtures-dir " +
                          ts::fixtures_root().string() + " " + args + " 2>&1";
  CliRun r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe) != nullptr) r.out += buf;
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("models").code, 0);
  const CliRun fetched = run_cli(std::string("fetch ") + ts::kBenchUrl);
  EXPECT_EQ(fetched.code, 0) << fetched.out;
  EXPECT_NE(fetched.out.find("\"reviews\": 200"), std::string::npos);
  EXPECT_EQ(run_cli("summarize https://example.com/x").code, 2);
  EXPECT_EQ(run_cli(std::string("ask ") + ts::kBenchUrl + " '  '").code, 2);
  EXPECT_EQ(run_cli(std::string("summarize ") + ts::kBenchUrl + " --model gpt-9").code, 2);
  EXPECT_EQ(run_cli("fetch https://www.booking.com/hotel/gr/nowhere.html").code, 3);
  EXPECT_NE(run_cli("frobnicate").code, 0);
}

TEST(Cli, AskPrintsNoticeForUnknownTopics) {
  const CliRun r = run_cli(std::string("ask ") + ts::kBenchUrl + " 'zxqv blorft?'");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("Insufficient evidence:", 0), 0u) << r.out;
  const CliRun json_run = run_cli(std::string("--json summarize ") + ts::kBenchUrl + " --lang el");
  EXPECT_EQ(json_run.code, 0);
  EXPECT_NE(json_run.out.find("\"language\": \"el\""), std::string::npos);
}

TEST(Cli, BenchWritesReports) {
  const auto out = ts::scratch_dir("bench");
  const CliRun r = run_cli("bench --trials 1 --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.out;
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(out)) {
    ++files;
    EXPECT_EQ(e.path().extension(), ".md");
  }
  EXPECT_EQ(files, 2);
  std::filesystem::remove_all(out);
}
