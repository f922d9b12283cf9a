#include <gtest/gtest.h>

#include <sstream>

#include "helix/ctc.hpp"
#include "helix/io.hpp"

using namespace helix;

TEST(ProbCsv, RoundTripAndDecode) {
  nn::ProbMatrix p{{0.3, 0.1, 0.1, 0.1, 0.4}, {0.3, 0.1, 0.05, 0.05, 0.5}};
  std::stringstream ss;
  io::write_prob_csv(ss, p);
  auto back = io::read_prob_csv(ss);
  ASSERT_EQ(back.timesteps(), 2u);
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t s = 0; s < 5; ++s) EXPECT_EQ(back(t, s), p(t, s));
  EXPECT_EQ(ctc::beam_search(back, 2).read.str(), "A");
}

TEST(ProbCsv, Malformed) {
  std::stringstream four("0.1,0.2,0.3,0.4\n");
  EXPECT_THROW(io::read_prob_csv(four), Error);
  std::stringstream word("0.1,0.2,x,0.3,0.4\n");
  EXPECT_THROW(io::read_prob_csv(word), Error);
}

TEST(Reads, NewlineDelimited) {
  std::stringstream ss("ACTA\n\nCTAG\r\n# comment\nGAGAT\n");
  auto reads = io::read_reads(ss);
  ASSERT_EQ(reads.size(), 3u);
  EXPECT_EQ(reads[2].str(), "GAGAT");
  std::stringstream bad("ACTX\n");
  EXPECT_THROW(io::read_reads(bad), Error);
}

TEST(Signal, CommaAndNewlineSeparated) {
  std::stringstream ss("signal\n0.5, -1.5\n2e-1\n");
  auto s = io::read_signal(ss);
  EXPECT_EQ(s, (std::vector<double>{0.5, -1.5, 0.2}));
  std::stringstream bad("0.5\nabc\n");
  EXPECT_THROW(io::read_signal(bad), Error);
}
