#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "noisecal/chain.hpp"
#include "noisecal/sources.hpp"

using namespace noisecal;

namespace {

const Frequency f6 = Frequency::gigahertz(6.0);

// Independent oracle: push a test input through the chain stage by stage
// using the raw attenuation and amplification relations.
double propagate_stage_by_stage(const std::vector<ChainStage>& stages, Frequency f,
                                double n_in) {
    double n = n_in;
    for (const ChainStage& stage : stages) {
        const double n_t = johnson_noise(stage.loss.temperature_k, f);
        n = stage.loss.efficiency * n + (1.0 - stage.loss.efficiency) * n_t;
        n = stage.amplifier.gain * (n + stage.amplifier.added_noise);
    }
    return n;
}

std::vector<ChainStage> random_chain(std::mt19937_64& rng, int max_stages) {
    std::uniform_int_distribution<int> count(1, max_stages);
    std::uniform_real_distribution<double> eta(0.3, 1.0);
    std::uniform_real_distribution<double> temp(0.0, 4.0);
    std::uniform_real_distribution<double> log_gain(0.0, 3.0);
    std::uniform_real_distribution<double> noise(0.0, 30.0);
    std::vector<ChainStage> stages(static_cast<std::size_t>(count(rng)));
    for (ChainStage& s : stages) {
        s.loss = {eta(rng), temp(rng)};
        s.amplifier = {std::pow(10.0, log_gain(rng)), noise(rng)};
    }
    return stages;
}

}  // namespace

TEST_CASE("compose_stage") {
    SUBCASE("lossless identity") {
        const EffectiveAmplifier eff = compose_stage({1.0, 0.0}, {100.0, 2.0}, f6);
        CHECK(eff.gain == doctest::Approx(100.0).epsilon(1e-15));
        CHECK(eff.added_noise == doctest::Approx(2.0).epsilon(1e-15));
    }
    SUBCASE("half transmission") {
        // eta = 0.5 at T = 0 (N_T = 0.5): G~ = 50, N~ = (0.5*0.5 + 2)/0.5 = 4.5
        const EffectiveAmplifier eff = compose_stage({0.5, 0.0}, {100.0, 2.0}, f6);
        CHECK(eff.gain == doctest::Approx(50.0).epsilon(1e-15));
        CHECK(eff.added_noise == doctest::Approx(4.5).epsilon(1e-15));
    }
    SUBCASE("insertion loss in dB") {
        const TransmissionEfficiency te = efficiency_from_gains(0.85, 1.0);
        CHECK(te.insertion_loss_db == doctest::Approx(0.7058107428570727).epsilon(1e-12));
    }
    SUBCASE("degenerate chain") {
        CHECK_THROWS_AS((void)compose_stage({0.0, 0.0}, {100.0, 2.0}, f6),
                        std::invalid_argument);
        CHECK_THROWS_AS((void)compose_stage({1.2, 0.0}, {100.0, 2.0}, f6),
                        std::invalid_argument);
        CHECK_THROWS_AS((void)compose_stage({1.0, 0.0}, {0.5, 2.0}, f6),
                        std::invalid_argument);
    }
}

TEST_CASE("compose_stage never improves the raw amplifier") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> eta(0.05, 1.0);
    std::uniform_real_distribution<double> temp(0.0, 10.0);
    for (int i = 0; i < 200; ++i) {
        const LossStage loss{eta(rng), temp(rng)};
        const AmplifierStage amp{50.0, 3.0};
        const EffectiveAmplifier eff = compose_stage(loss, amp, f6);
        CHECK(eff.gain <= amp.gain);
        CHECK(eff.added_noise >= amp.added_noise);
    }
}

TEST_CASE("reduce_chain") {
    SUBCASE("two-stage Friis sum") {
        // (G~=50, N~=4.5) then (G~=1000, N~=20): gain 50000, noise 4.5 + 20/50
        const std::vector<ChainStage> stages{
            {{0.5, 0.0}, {100.0, 2.0}},   // reduces to (50, 4.5)
            {{1.0, 0.0}, {1000.0, 20.0}},
        };
        const EffectiveAmplifier eff = reduce_chain(stages, f6);
        CHECK(eff.gain == doctest::Approx(50000.0).epsilon(1e-14));
        CHECK(eff.added_noise == doctest::Approx(4.9).epsilon(1e-14));
    }
    SUBCASE("single stage unchanged") {
        const std::vector<ChainStage> stages{{{1.0, 0.0}, {123.0, 7.5}}};
        const EffectiveAmplifier eff = reduce_chain(stages, f6);
        CHECK(eff.gain == 123.0);
        CHECK(eff.added_noise == 7.5);
    }
    SUBCASE("empty chain") {
        CHECK_THROWS_AS((void)reduce_chain({}, f6), std::invalid_argument);
    }
}

TEST_CASE("Friis oracle: stage-by-stage propagation matches the reduction") {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> input(0.5, 20.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto stages = random_chain(rng, 6);
        const double n_in = input(rng);
        const double direct = propagate_stage_by_stage(stages, f6, n_in);
        const double reduced = chain_output(reduce_chain(stages, f6), n_in);
        CHECK(std::abs(direct - reduced) <= 1e-12 * direct);
    }
}

TEST_CASE("reduction is associative") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const auto stages = random_chain(rng, 6);
        if (stages.size() < 2) {
            continue;
        }
        const std::size_t split = stages.size() / 2;
        const std::span<const ChainStage> all(stages);
        const EffectiveAmplifier head = reduce_chain(all.subspan(0, split), f6);
        const EffectiveAmplifier tail = reduce_chain(all.subspan(split), f6);
        const EffectiveAmplifier whole = reduce_chain(all, f6);
        const double gain = head.gain * tail.gain;
        const double noise = head.added_noise + tail.added_noise / head.gain;
        CHECK(gain == doctest::Approx(whole.gain).epsilon(1e-12));
        CHECK(noise == doctest::Approx(whole.added_noise).epsilon(1e-12));
    }
}

TEST_CASE("Friis ordering matters with unequal gains") {
    const std::vector<ChainStage> ab{
        {{1.0, 0.0}, {10.0, 5.0}},
        {{1.0, 0.0}, {1000.0, 12.0}},
    };
    const std::vector<ChainStage> ba{ab[1], ab[0]};
    const EffectiveAmplifier first = reduce_chain(ab, f6);
    const EffectiveAmplifier second = reduce_chain(ba, f6);
    CHECK(first.gain == doctest::Approx(second.gain).epsilon(1e-14));
    CHECK(first.added_noise != second.added_noise);

    // With zero noises, order cannot matter.
    const std::vector<ChainStage> quiet_ab{
        {{1.0, 0.0}, {10.0, 0.0}},
        {{1.0, 0.0}, {1000.0, 0.0}},
    };
    const std::vector<ChainStage> quiet_ba{quiet_ab[1], quiet_ab[0]};
    CHECK(reduce_chain(quiet_ab, f6).added_noise ==
          reduce_chain(quiet_ba, f6).added_noise);
}

TEST_CASE("chain_output") {
    const EffectiveAmplifier canonical{1e9, 1.0};
    CHECK(chain_output(canonical, 0.5) == doctest::Approx(1.5e9).epsilon(1e-14));
    CHECK(chain_output({1.0, 0.0}, 3.7) == 3.7);
    // The y-intercept at n_in = 0 is the output-referred system-added noise.
    CHECK(chain_output(canonical, 0.0) == doctest::Approx(1e9).epsilon(1e-14));
}

TEST_CASE("move_reference_plane") {
    SUBCASE("identity at unit efficiency") {
        for (double ex : {0.0, 0.5, 3.0, 42.0}) {
            const PlaneCorrection c = move_reference_plane(ex, 1.0, 0.5);
            CHECK(c.excess == ex);
            CHECK(!c.unphysical);
        }
    }
    SUBCASE("worked value") {
        const PlaneCorrection c = move_reference_plane(3.0, 0.85, 0.5);
        CHECK(c.excess == doctest::Approx(2.40).epsilon(1e-12));
        CHECK(!c.unphysical);
    }
    SUBCASE("over-subtraction is flagged, not clamped") {
        const PlaneCorrection c = move_reference_plane(0.1, 0.85, 0.5);
        CHECK(c.excess < 0.0);
        CHECK(c.unphysical);
    }
    SUBCASE("general overload reduces to the equal-efficiency form") {
        for (double eta : {0.6, 0.85, 1.0}) {
            const PlaneCorrection a = move_reference_plane(3.0, eta, 0.5);
            const PlaneCorrection b = move_reference_plane(3.0, eta, eta, 0.5);
            CHECK(a.excess == doctest::Approx(b.excess).epsilon(1e-12));
        }
        // Distinct efficiencies: still subtracts both loss paths.
        const PlaneCorrection c = move_reference_plane(3.0, 0.9, 0.7, 0.5);
        CHECK(c.excess < 3.0);
        CHECK(c.excess > 0.0);
    }
    SUBCASE("validation") {
        CHECK_THROWS_AS((void)move_reference_plane(3.0, 0.0, 0.5), std::invalid_argument);
        CHECK_THROWS_AS((void)move_reference_plane(3.0, 1.5, 0.5), std::invalid_argument);
    }
}

TEST_CASE("efficiency_from_gains") {
    const TransmissionEfficiency unity = efficiency_from_gains(2e8, 2e8);
    CHECK(unity.eta == 1.0);
    CHECK(unity.insertion_loss_db == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(!unity.inconsistent);

    const TransmissionEfficiency half = efficiency_from_gains(1e8, 2e8);
    CHECK(half.eta == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(half.insertion_loss_db == doctest::Approx(3.0102999566398120).epsilon(1e-12));

    // 0.8-0.9 maps onto roughly 0.5-1 dB.
    CHECK(efficiency_from_gains(0.9, 1.0).insertion_loss_db < 0.5);
    CHECK(efficiency_from_gains(0.8, 1.0).insertion_loss_db < 1.0);
    CHECK(efficiency_from_gains(0.79, 1.0).insertion_loss_db > 1.0);

    const TransmissionEfficiency odd = efficiency_from_gains(2.2e8, 2e8);
    CHECK(odd.inconsistent);
    CHECK(odd.eta > 1.0);

    CHECK_THROWS_AS((void)efficiency_from_gains(0.0, 1.0), std::invalid_argument);
}
