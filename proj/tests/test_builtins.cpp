#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "qfst/builtins.hpp"
#include "qfst/simulator.hpp"
#include "test_util.hpp"

using namespace qfst;

TEST_CASE("the f1 builder produces a valid 12-state machine") {
    MachineSpec f1 = build_f1_qfst();
    CHECK(f1.name == "f1");
    CHECK(f1.num_states() == 12);
    CHECK(validate_machine(f1).ok());
    CHECK(f1.accept_states() == std::vector<std::string>{"qacc"});
    CHECK(f1.reject_states() == std::vector<std::string>{"R", "qrej", "rA", "rB", "rC", "rD"});

    // left marker, each letter, separator, right marker: all unitary
    for (char sym : f1.symbols()) {
        Matrix u = f1.operations.at(sym).recompose(f1.num_states());
        CHECK(unitarity_residual(u) <= 1e-12);
    }
    // the two letter operations share one matrix
    Matrix a = f1.operations.at('a').recompose(12);
    Matrix b = f1.operations.at('b').recompose(12);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("builder spot checks from the algorithm") {
    MachineSpec f1 = build_f1_qfst();

    RunResult bcb = run(f1, "bcb");
    REQUIRE(bcb.accept_dist.count("b") == 1);
    CHECK(bcb.accept_dist.at("b") == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(bcb.reject_prob == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

    RunResult cc = run(f1, "cc");
    CHECK(cc.accept_dist.empty());
    CHECK(cc.reject_prob == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cc.unresolved_prob <= 1e-12);
}

TEST_CASE("builder rejects bad alphabets") {
    CHECK_THROWS_AS(build_f1_qfst({'a', 'b'}, 'a'), MachineError);
    CHECK_THROWS_AS(build_f1_qfst({}, 'c'), MachineError);
    CHECK_THROWS_AS(build_f1_qfst({'a', 'a'}, 'c'), MachineError);
    CHECK_THROWS_AS(build_f1_qfst({'^'}, 'c'), MachineError);
}

TEST_CASE("the alphabet variant with digits behaves identically") {
    MachineSpec f1 = build_f1_qfst({'0', '1'}, '2');
    CHECK(validate_machine(f1).ok());
    RunResult r = run(f1, "01201");
    REQUIRE(r.accept_dist.count("01") == 1);
    CHECK(r.accept_dist.at("01") == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(r.reject_prob == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("the stochastic analog validates and lands at 1/3") {
    MachineSpec analog = build_f1_stochastic_analog();
    CHECK(analog.mode == Mode::stochastic);
    CHECK(validate_machine(analog).ok());

    RunResult wcw = run_stochastic(analog, "abcab");
    CHECK(wcw.accept_dist.at("ab") == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(wcw.reject_prob == doctest::Approx(2.0 / 3.0).epsilon(1e-9));

    RunResult sep_only = run_stochastic(analog, "c");
    CHECK(sep_only.accept_dist.at("") == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(sep_only.reject_prob == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("f1 oracle") {
    CHECK(f1_oracle("abcab") == std::optional<std::string>("ab"));
    CHECK(f1_oracle("c") == std::optional<std::string>(""));
    CHECK_FALSE(f1_oracle("abab").has_value());
    CHECK_FALSE(f1_oracle("acbca").has_value());
    CHECK_FALSE(f1_oracle("ab").has_value());
    CHECK_FALSE(f1_oracle("").has_value());
    CHECK_FALSE(f1_oracle("cc").has_value());
    CHECK_FALSE(f1_oracle("acb").has_value());
}

TEST_CASE("oracle agrees with the split-enumeration check up to length 8") {
    std::size_t checked = 0;
    for (const auto& word : enumerate_words({'a', 'b', 'c'}, 8)) {
        CHECK(f1_oracle(word) == testutil::split_enumeration_oracle(word));
        ++checked;
    }
    CHECK(checked == 9841);  // sum of 3^k for k = 0..8
}

TEST_CASE("runs match the hand-derived closed form on every input up to length 7") {
    MachineSpec f1 = build_f1_qfst();
    MachineSpec analog = build_f1_stochastic_analog();
    for (const auto& word : enumerate_words({'a', 'b', 'c'}, 7)) {
        CHECK(testutil::run_results_close(run_prevalidated(f1, word),
                                          testutil::f1_expected_quantum(word)));
        CHECK(testutil::run_results_close(run_prevalidated(analog, word),
                                          testutil::f1_expected_stochastic(word)));
    }
}

TEST_CASE("accept mass concentrates on the oracle output") {
    MachineSpec f1 = build_f1_qfst();
    for (const auto& word : enumerate_words({'a', 'b', 'c'}, 7)) {
        RunResult r = run_prevalidated(f1, word);
        auto expected = f1_oracle(word);
        if (expected) {
            REQUIRE(r.accept_dist.size() == 1);
            CHECK(r.accept_dist.count(*expected) == 1);
        } else {
            for (const auto& [output, p] : r.accept_dist) {
                (void)output;
                CHECK(p <= 1.0 / 6.0 + 1e-9);
            }
        }
    }
}

TEST_CASE("exhaustive check on the f1 machine") {
    MachineSpec f1 = build_f1_qfst();
    F1Oracle oracle;

    SUBCASE("max_len 3") {
        BoundedErrorReport report = exhaustive_check(f1, oracle, 3);
        CHECK(report.checked_inputs == 40);  // 1 + 3 + 9 + 27
        CHECK(report.ok());
        REQUIRE(report.min_accept_on_defined.has_value());
        REQUIRE(report.min_reject_on_undefined.has_value());
        CHECK(*report.min_accept_on_defined == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
        CHECK(*report.min_reject_on_undefined == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    }
    SUBCASE("max_len 0") {
        BoundedErrorReport report = exhaustive_check(f1, oracle, 0);
        CHECK(report.checked_inputs == 1);
        CHECK(report.undefined_inputs == 1);
        CHECK(report.defined_inputs == 0);
        CHECK_FALSE(report.min_accept_on_defined.has_value());
        CHECK(*report.min_reject_on_undefined == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(report.ok());
    }
    SUBCASE("max_len 7 covers all 3280 inputs with zero violations") {
        BoundedErrorReport report = exhaustive_check(f1, oracle, 7);
        CHECK(report.checked_inputs == 3280);
        CHECK(report.defined_inputs == 15);
        CHECK(report.undefined_inputs == 3265);
        CHECK(report.violations.empty());
    }
}

TEST_CASE("exhaustive check flags every defined input of the classical analog") {
    BoundedErrorReport report = exhaustive_check(build_f1_stochastic_analog(), F1Oracle{}, 3);
    CHECK_FALSE(report.ok());
    // defined inputs up to length 3: "c", "aca", "bcb"
    CHECK(report.defined_inputs == 3);
    CHECK(report.violations.size() == 3);
    for (const auto& v : report.violations) {
        REQUIRE(v.expected_output.has_value());
        CHECK(v.observed.accept_dist.at(*v.expected_output) ==
              doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    }
    REQUIRE(report.min_accept_on_defined.has_value());
    CHECK(*report.min_accept_on_defined == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("exhaustive check is deterministic across worker counts") {
    MachineSpec f1 = build_f1_qfst();
    F1Oracle oracle;
    BoundedErrorReport serial = exhaustive_check(f1, oracle, 5, 2.0 / 3.0, 1);
    BoundedErrorReport parallel = exhaustive_check(f1, oracle, 5, 2.0 / 3.0, 4);
    CHECK(to_json(serial) == to_json(parallel));
}

TEST_CASE("exhaustive check rejects an oracle over the wrong alphabet") {
    MachineSpec digits = build_f1_qfst({'0', '1'}, '2');
    CHECK_THROWS_AS(exhaustive_check(digits, F1Oracle{}, 3), MachineError);
    F1Oracle digit_oracle;
    digit_oracle.letters = {'0', '1'};
    digit_oracle.separator = '2';
    CHECK(exhaustive_check(digits, digit_oracle, 3).ok());
}

TEST_CASE("word enumeration is ordered by length then lexicographically") {
    auto words = enumerate_words({'a', 'b'}, 2);
    std::vector<std::string> expected = {"", "a", "b", "aa", "ab", "ba", "bb"};
    CHECK(words == expected);
}

TEST_CASE("builtin machine lookup") {
    CHECK(builtin_machine("f1").has_value());
    CHECK(builtin_machine("f1-classical").has_value());
    CHECK_FALSE(builtin_machine("nope").has_value());
    CHECK(builtin_names().size() == 2);
}

TEST_CASE("report JSON carries counts, minima and capped violations") {
    BoundedErrorReport report = exhaustive_check(build_f1_stochastic_analog(), F1Oracle{}, 4);
    std::string json = to_json(report, 2);
    CHECK(json.find("\"violations_total\":3") != std::string::npos);  // w in {"", a, b}
    CHECK(json.find("\"checked_inputs\":121") != std::string::npos);
    CHECK(json.find("\"expected_output\"") != std::string::npos);
    // capped at 2 entries, each carrying its own input plus the observed one
    std::size_t count = 0;
    for (std::size_t pos = json.find("\"input\":"); pos != std::string::npos;
         pos = json.find("\"input\":", pos + 1))
        ++count;
    CHECK(count == 4);
}
