#include <gtest/gtest.h>

#include "envsniff/errors.hpp"
#include "envsniff/resolver.hpp"
#include "fixtures.hpp"
#include "spec_grammar.hpp"
#include "synthetic_bank.hpp"

using namespace envsniff;

namespace {

UsageRecord call(std::string fqn, std::vector<std::string> kw = {}, int cell = 0) {
  UsageRecord u;
  u.fqn = std::move(fqn);
  u.call = CallShape{1, std::move(kw), false, false};
  u.cell_position = cell;
  return u;
}

UsageSet usages(std::vector<UsageRecord> u) {
  UsageSet s;
  s.usages = std::move(u);
  return s;
}

std::shared_ptr<const ReleaseApiSet> rel(const std::string& lib, const std::string& ver,
                                         const std::vector<std::string>& fqns, std::vector<std::string> top = {}) {
  auto r = std::make_shared<ReleaseApiSet>();
  r->library = lib;
  r->version = ver;
  r->top_level = top.empty() ? std::vector<std::string>{lib} : top;
  for (const auto& f : fqns) r->apis[f] = ApiRecord{f, DefKind::function, {}, false};
  return r;
}

VersionRange range_of(std::vector<std::string> feasible) {
  VersionRange r;
  r.library = "lib";
  r.feasible = std::move(feasible);
  return r;
}

}  // namespace

TEST(Resolve, DualFormPandas) {
  auto p1 = std::make_shared<ReleaseApiSet>(fixtures::ingest("pandas", "1.0.0", fixtures::pandas_files()));
  auto files = fixtures::pandas_files();
  files["pandas/__init__.py"] = "";  // no top-level re-export in this older release
  auto p0 = std::make_shared<ReleaseApiSet>(fixtures::ingest("pandas", "0.9.0", files));
  auto idx = ApiBankIndex::build({p0, p1});
  auto r = resolve(usages({call("pandas.read_excel"), call("pandas.io.excel._base.read_excel")}), idx);
  ASSERT_EQ(r.resolved.size(), 1u);
  EXPECT_EQ(r.resolved[0].library, "pandas");
  EXPECT_EQ(r.resolved[0].feasible, std::vector<std::string>{"1.0.0"});
  EXPECT_TRUE(r.unresolved_usages.empty());
}

TEST(Resolve, EmptyUsageSet) {
  auto idx = ApiBankIndex::build(fixtures::toylib_releases());
  auto r = resolve(UsageSet{}, idx);
  EXPECT_TRUE(r.resolved.empty());
  EXPECT_TRUE(r.unresolved_usages.empty());
}

TEST(Resolve, EmptyBank) { EXPECT_THROW(resolve(UsageSet{}, ApiBankIndex{}), EmptyBank); }

TEST(Resolve, IntersectionOfTwoApis) {
  auto idx = ApiBankIndex::build(fixtures::toylib_releases());
  auto r = resolve(usages({call("toylib.core.g"), call("toylib.core.h", {}, 1)}), idx);
  ASSERT_EQ(r.resolved.size(), 1u);
  EXPECT_EQ(r.resolved[0].feasible, std::vector<std::string>{"3.0"});
  EXPECT_EQ(requirement_line(r.resolved[0]), "toylib==3.0");
}

TEST(Resolve, KeywordNarrowing) {
  auto idx = ApiBankIndex::build(fixtures::toylib_releases());
  auto r = resolve(usages({call("toylib.load", {"encoding"})}), idx);
  ASSERT_EQ(r.resolved.size(), 1u);
  EXPECT_EQ(r.resolved[0].feasible, (std::vector<std::string>{"3.0", "4.0", "5.0"}));
  EXPECT_EQ(requirement_line(r.resolved[0]), "toylib>=3.0");
}

TEST(Resolve, UnknownApiDemotedOthersResolved) {
  auto idx = ApiBankIndex::build(fixtures::toylib_releases());
  auto r = resolve(usages({call("toylib.core.f"), call("toylib.core.nope", {}, 2)}), idx);
  ASSERT_EQ(r.resolved.size(), 1u);
  EXPECT_EQ(r.resolved[0].emitted.kind, ConstraintKind::any);
  ASSERT_EQ(r.unresolved_usages.size(), 1u);
  EXPECT_EQ(r.unresolved_usages[0].reason, UnresolvedReason::unknown_api);
}

TEST(Resolve, EmptyIntersectionDemotesMinority) {
  // g lives in 2.0-3.0 and h in 3.0-4.0; only6 shares no version with them
  auto v6 = rel("toylib", "6.0", {"toylib.core.only6"});
  auto rels = fixtures::toylib_releases();
  rels.push_back(v6);
  auto idx6 = ApiBankIndex::build(rels);
  auto r = resolve(usages({call("toylib.core.g"), call("toylib.core.h"), call("toylib.core.only6")}), idx6);
  ASSERT_EQ(r.resolved.size(), 1u);
  EXPECT_EQ(r.resolved[0].feasible, std::vector<std::string>{"3.0"});
  ASSERT_EQ(r.unresolved_usages.size(), 1u);
  EXPECT_EQ(r.unresolved_usages[0].usage.fqn, "toylib.core.only6");
  EXPECT_EQ(r.unresolved_usages[0].reason, UnresolvedReason::empty_intersection);
}

TEST(Resolve, TieBreakPrefersMatchingName) {
  auto a = rel("utils", "1.0", {"utils.helper"}, {"utils"});
  auto b = rel("other-utils", "1.0", {"utils.helper"}, {"utils"});
  auto idx = ApiBankIndex::build({a, b});
  auto r = resolve(usages({call("utils.helper")}), idx);
  ASSERT_EQ(r.resolved.size(), 1u);
  EXPECT_EQ(r.resolved[0].library, "utils");
  bool noted = std::any_of(r.diagnostics.begin(), r.diagnostics.end(),
                           [](const Diagnostic& d) { return d.candidates.size() == 2; });
  EXPECT_TRUE(noted);

  ResolvePolicy strict;
  strict.reject_ambiguous = true;
  auto r2 = resolve(usages({call("utils.helper")}), idx, strict);
  EXPECT_TRUE(r2.resolved.empty());
  ASSERT_EQ(r2.unresolved_usages.size(), 1u);
  EXPECT_EQ(r2.unresolved_usages[0].reason, UnresolvedReason::ambiguous_library);
}

TEST(Resolve, TieBreakByCoverageThenName) {
  auto a = rel("aaa", "1.0", {"sk.x"}, {"sk"});
  auto b = rel("bbb", "1.0", {"sk.x", "sk.y"}, {"sk"});
  auto c = rel("ccc", "1.0", {"sk.x"}, {"sk"});
  auto idx = ApiBankIndex::build({a, b, c});
  auto r = resolve(usages({call("sk.x"), call("sk.y")}), idx);
  ASSERT_EQ(r.resolved.size(), 1u);
  EXPECT_EQ(r.resolved[0].library, "bbb");
  auto r2 = resolve(usages({call("sk.x")}), ApiBankIndex::build({c, a}));
  EXPECT_EQ(r2.resolved[0].library, "aaa");
}

TEST(Resolve, StarImportPolicy) {
  auto idx = ApiBankIndex::build(fixtures::toylib_releases());
  UsageRecord u = call("toylib.f");
  u.low_confidence = true;
  EXPECT_TRUE(resolve(usages({u}), idx).resolved.empty());
  ResolvePolicy p;
  p.include_star_imports = true;
  EXPECT_EQ(resolve(usages({u}), idx, p).resolved.size(), 1u);
}

TEST(Resolve, Deterministic) {
  auto idx = ApiBankIndex::build(fixtures::toylib_releases());
  auto u = usages({call("toylib.core.g"), call("toylib.f"), call("toylib.core.zzz")});
  EXPECT_EQ(emit_requirements(resolve(u, idx)), emit_requirements(resolve(u, idx)));
  EXPECT_EQ(emit_pipfile(resolve(u, idx)), emit_pipfile(resolve(u, idx)));
}

TEST(Constraint, Shapes) {
  std::vector<std::string> all = {"1.0", "1.1", "1.2", "2.0"};
  auto r = range_of({"1.1"});
  EXPECT_EQ(choose_emitted_constraint(r, all), (Constraint{ConstraintKind::exact, "1.1", ""}));
  r = range_of(all);
  EXPECT_EQ(choose_emitted_constraint(r, all).kind, ConstraintKind::any);
  r = range_of({"1.1", "1.2", "2.0"});
  EXPECT_EQ(choose_emitted_constraint(r, all), (Constraint{ConstraintKind::at_least, "1.1", ""}));
  r = range_of({"1.0", "1.1"});
  EXPECT_EQ(choose_emitted_constraint(r, all), (Constraint{ConstraintKind::closed_interval, "1.0", "1.1"}));
}

TEST(Constraint, DisjointEmitsNewestRun) {
  std::vector<std::string> all = {"1.0", "1.1", "1.2", "2.0"};
  auto r = range_of({"1.0", "1.1", "2.0"});
  r.emitted = choose_emitted_constraint(r, all);
  EXPECT_EQ(r.emitted, (Constraint{ConstraintKind::exact, "2.0", ""}));
  EXPECT_EQ(r.excluded_runs, (std::vector<std::vector<std::string>>{{"1.0", "1.1"}}));
  Resolution res;
  res.resolved.push_back(r);
  EXPECT_NE(emit_requirements(res).find("# lib: also feasible but not emitted: 1.0, 1.1"), std::string::npos);
}

TEST(Constraint, PinLatest) {
  std::vector<std::string> all = {"1.0", "1.1", "1.2"};
  auto r = range_of(all);
  ResolvePolicy p;
  p.pin_latest = true;
  EXPECT_EQ(choose_emitted_constraint(r, all, p), (Constraint{ConstraintKind::exact, "1.2", ""}));
}

TEST(Emit, RequirementsLines) {
  VersionRange pandas;
  pandas.library = "pandas";
  pandas.emitted = {ConstraintKind::any, "", ""};
  VersionRange sklearn;
  sklearn.library = "sklearn";
  sklearn.emitted = {ConstraintKind::at_least, "0.23.0", ""};
  VersionRange scipy;
  scipy.library = "scipy";
  scipy.emitted = {ConstraintKind::exact, "1.17.5", ""};
  EXPECT_EQ(requirement_line(pandas), "pandas");
  EXPECT_EQ(requirement_line(sklearn), "sklearn>=0.23.0");
  EXPECT_EQ(requirement_line(scipy), "scipy==1.17.5");
  EXPECT_EQ(pipfile_value(pandas), "\"*\"");
  EXPECT_EQ(pipfile_value(sklearn), "\">= 0.23.0\"");

  Resolution res;
  res.bank_identity = "abc";
  res.resolved = {sklearn, pandas};
  std::string text = emit_requirements(res);
  EXPECT_NE(text.find("# bank abc\n"), std::string::npos);
  EXPECT_NE(text.find("pandas\nsklearn>=0.23.0\n"), std::string::npos);
}

TEST(Emit, EmptyResolution) {
  Resolution res;
  res.bank_identity = "abc";
  std::string req = emit_requirements(res);
  for (std::size_t pos = 0, next; pos < req.size(); pos = next + 1) {
    next = req.find('\n', pos);
    EXPECT_EQ(req[pos], '#');
  }
  EXPECT_EQ(emit_pipfile(res),
            "[[source]]\nurl = \"https://pypi.python.org/simple\"\nverify_ssl = true\nname = \"pypi\"\n");
}

TEST(Emit, PipfileTable) {
  VersionRange r;
  r.library = "sqlalchemy";
  r.emitted = {ConstraintKind::closed_interval, "1.3.0", "1.4.2"};
  Resolution res;
  res.resolved = {r};
  std::string p = emit_pipfile(res);
  EXPECT_NE(p.find("\n[packages]\nsqlalchemy = \">=1.3.0,<=1.4.2\"\n"), std::string::npos);
}

TEST(Emit, UnresolvedAsComments) {
  auto idx = ApiBankIndex::build(fixtures::toylib_releases());
  auto r = resolve(usages({call("toylib.core.missing", {}, 4)}), idx);
  EXPECT_NE(emit_requirements(r).find("# unresolved: toylib.core.missing (unknown_api, cell 4)"), std::string::npos);
}

TEST(Emit, RoundTripThroughIndependentGrammar) {
  std::vector<std::string> all = {"0.9", "1.0", "1.1", "1.2", "2.0"};
  std::vector<std::vector<std::string>> feasibles = {{"1.0"}, all, {"1.1", "1.2", "2.0"}, {"1.0", "1.1"},
                                                     {"0.9", "1.2"}};
  for (const auto& f : feasibles) {
    VersionRange r = range_of(f);
    r.emitted = choose_emitted_constraint(r, all);
    std::vector<std::string> run = f;
    if (!r.excluded_runs.empty()) run = {f.back()};
    auto line = grammar::parse_line(requirement_line(r));
    ASSERT_TRUE(line.has_value()) << requirement_line(r);
    EXPECT_EQ(grammar::admitted(*line, all), run);
    auto entry = grammar::parse_pipfile_entry(r.library + " = " + pipfile_value(r));
    ASSERT_TRUE(entry.has_value()) << pipfile_value(r);
    EXPECT_EQ(grammar::admitted(*entry, all), run);
  }
}

TEST(Randomized, OracleAndMaximality) {
  int ranges = 0;
  for (std::uint32_t seed = 1; seed <= 300; ++seed) {
    synthetic::Case c = synthetic::generate(seed);
    auto idx = ApiBankIndex::build(c.releases());
    auto verdict = synthetic::check(c, resolve(c.usage_set(), idx));
    ranges += verdict.ranges;
    for (const auto& p : verdict.problems) ADD_FAILURE() << p;
  }
  EXPECT_GT(ranges, 300);
}
