#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "core/mutation.hpp"

#include "core/common.hpp"
#include "core/io.hpp"
#include "testutil.hpp"

using namespace gs;

TEST_CASE("parse accepts the full grammar") {
  auto m = parse_mutation("22:10874444:C>T_1|0");
  REQUIRE(m.has_value());
  CHECK(m->chrom == "22");
  CHECK(m->pos == 10874444);
  CHECK(m->ref == "C");
  CHECK(m->alts == std::vector<std::string>{"T"});
  CHECK(m->gt_a == 1);
  CHECK(m->gt_b == 0);
  CHECK(m->phased);

  auto u = parse_mutation("chrX:5:AT>A_0/1");
  REQUIRE(u.has_value());
  CHECK(u->chrom == "chrX");
  CHECK_FALSE(u->phased);

  auto multi = parse_mutation("1:99:A>C,G,T_2|3");
  REQUIRE(multi.has_value());
  CHECK(multi->alts.size() == 3);

  auto star = parse_mutation("1:7:AC>A,*_0|2");
  REQUIRE(star.has_value());
  CHECK(star->alts[1] == "*");
}

TEST_CASE("render is the inverse of parse") {
  for (const char* text : {"22:10874444:C>T_1|0", "chrX:5:AT>A_0/1", "1:99:A>C,G,T_2|3",
                           "1:7:ACGTN>N_1|1", "9:1:A>AC,ACC_0/2"}) {
    auto m = parse_mutation(text);
    REQUIRE(m.has_value());
    CHECK(m->render() == text);
    CHECK(parse_mutation(m->render()) == m);
  }
}

TEST_CASE("parse rejects grammar violations") {
  for (const char* text : {
           "",                     // empty
           "22",                   // no fields
           "22:10:A>C",            // no genotype
           "22:10:A>C_0",          // half genotype
           "22:10:A>C_0|",         // missing second allele
           "22:10:A>C_|1",         // missing first allele
           "22:10:A>C_0-1",        // bad separator
           "22:10:A_0|1",          // no alts
           "22:10:A>_0|1",         // empty alt
           "22:10:A>C,_0|1",       // trailing comma
           "22:10:>C_0|1",         // empty ref
           "22::A>C_0|1",          // empty pos
           "22:x9:A>C_0|1",        // non-digit pos
           "22:10:AB>C_0|1",       // ref outside ACGTN
           "22:10:A>CB_0|1",       // alt outside ACGTN*
           ":10:A>C_0|1",          // empty chrom
           "2-2:10:A>C_0|1",       // bad chrom char
           "22:10:A>C_0|2",        // allele index beyond alts
           "22:10:A>C_3|0",        // allele index beyond alts
           "22:10:A>C_0|1 ",       // trailing space
           "x 22:10:A>C_0|1",      // leading garbage
           "22:10:A>C_0|1extra",   // trailing garbage
       }) {
    CAPTURE(text);
    CHECK_FALSE(parse_mutation(text).has_value());
  }
}

TEST_CASE("locus key drops the genotype suffix") {
  auto m = parse_mutation("22:10:A>C,G_1|2");
  REQUIRE(m.has_value());
  CHECK(m->locus_key() == "22:10:A>C,G");
}

TEST_CASE("corpus round trip preserves profiles and index") {
  tt::TmpDir tmp("mutation");
  Cohort c;
  c.samples.push_back({"a", {"22:10:A>C_0|1", "22:20:G>T_1|1"}, origin_t::real});
  c.samples.push_back({"b", {"22:10:A>C_0|1"}, origin_t::real});
  c.rebuild_index();
  CHECK(c.index.full_texts.size() == 2);
  CHECK(c.index.locus_keys ==
        std::set<std::string>{"22:10:A>C", "22:20:G>T"});

  std::string path = tmp.file("corpus.txt");
  write_corpus(c, path);
  CHECK(read_file(path) == "22:10:A>C_0|1 22:20:G>T_1|1\n22:10:A>C_0|1\n");

  Cohort back = load_corpus(path, "s_");
  REQUIRE(back.samples.size() == 2);
  CHECK(back.samples[0].sample_id == "s_0000");
  CHECK(back.samples[0].mutations == c.samples[0].mutations);
  CHECK(back.samples[1].mutations == c.samples[1].mutations);
  CHECK(back.index.full_texts == c.index.full_texts);
}

TEST_CASE("load_corpus rejects malformed lines") {
  tt::TmpDir tmp("mutation_bad");
  std::string path = tmp.file("bad.txt");
  write_file(path, "22:10:A>C_0|1 notamutation\n");
  CHECK_THROWS_AS(load_corpus(path, "s_"), Error);
}
