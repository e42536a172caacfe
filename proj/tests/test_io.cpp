#include <gtest/gtest.h>

#include <sstream>

#include "tbsim/io.hpp"

using namespace tbsim;

TEST(Io, NumbersUseFullPrecision) {
    EXPECT_EQ(io::num(0.1), "0.10000000000000001");
    EXPECT_EQ(io::num(2.0), "2");
    EXPECT_EQ(io::num(std::nan("")), "nan");
    EXPECT_EQ(std::strtod(io::num(1.0 / 3.0).c_str(), nullptr), 1.0 / 3.0);
}

TEST(Io, TrajectoryCsvLayout) {
    const auto traj = evolve_unitary(build_chain(2, 1.0), QuantumState::basis(2, 0), {0.0, 0.5});
    std::ostringstream out;
    io::write_trajectory_csv(out, traj);
    std::istringstream in(out.str());
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    ASSERT_EQ(lines.size(), 5u);
    EXPECT_EQ(lines[0][0], '#');
    EXPECT_EQ(lines[2], "t[1/J],p_site0,p_site1");
    EXPECT_EQ(lines[3], "0,1,0");
    EXPECT_EQ(lines[4].substr(0, 4), "0.5,");
}

TEST(Io, ComplexMatricesAsPairs) {
    Eigen::MatrixXcd m(1, 2);
    m << Complex(1, 2), Complex(0, -1);
    const auto j = io::complex_matrix(m);
    EXPECT_EQ(j.dump(), "[[[1.0,2.0],[0.0,-1.0]]]");
}

TEST(Io, TrajectoryJsonCarriesStatesOnRequest) {
    const auto traj = evolve_unitary(build_chain(3, 1.0), QuantumState::basis(3, 0), {0.0, 1.0});
    EXPECT_FALSE(io::trajectory_json(traj, false).contains("states"));
    const auto j = io::trajectory_json(traj, true);
    ASSERT_TRUE(j.contains("states"));
    EXPECT_EQ(j["states"].size(), 2u);
    EXPECT_EQ(j["populations"][0][0], 1.0);

    const auto open = evolve_lindblad(build_chain(2, 1.0), DensityMatrix::from_state(QuantumState::basis(2, 0)), {0.1, 0.0}, {0.0});
    EXPECT_EQ(io::trajectory_json(open, true)["densities"][0].size(), 3u);
}

TEST(Io, EntanglementCsvHasOneColumnPerMetric) {
    const auto traj = evolve_unitary(build_grid(3, 3, 1.0), QuantumState::basis(9, 0), {0.0, 0.5});
    std::ostringstream out;
    io::write_entanglement_csv(out, entanglement_reports(traj));
    std::istringstream in(out.str());
    std::string c1, c2, header, row;
    std::getline(in, c1);
    std::getline(in, c2);
    std::getline(in, header);
    std::getline(in, row);
    const auto cols = std::count(header.begin(), header.end(), ',') + 1;
    EXPECT_EQ(cols, std::count(row.begin(), row.end(), ',') + 1);
    // t, E_gl, C_s,L, 5 shells, 36 pairs, 3 bounds, 9 entropies
    EXPECT_EQ(cols, 3 + 5 + 36 + 3 + 9);
    EXPECT_NE(row.find("nan"), std::string::npos);  // shell 0 is undefined
    const auto j = io::entanglement_json(entanglement_reports(traj));
    EXPECT_TRUE(j["reports"][0]["shell_average"][0].is_null());
}

TEST(Io, SweepAndStarkTables) {
    std::ostringstream out;
    io::write_sweep_csv(out, {{1.0, 5.5, 0.2, 3.0, 3.0, false}, {0.0, 7.0, 0.0, std::nan(""), std::nan(""), true}}, "");
    EXPECT_NE(out.str().find("delta/J,PR_mean[sites]"), std::string::npos);
    EXPECT_NE(out.str().find("0,7,0,nan,nan,boundary"), std::string::npos);
    std::ostringstream s;
    io::write_stark_csv(s, {{2.0, 3.14, 1.41, false}});
    EXPECT_NE(s.str().find("2,3.1400000000000001,1.4099999999999999,ok"), std::string::npos);
    EXPECT_TRUE(io::sweep_json({{0.0, 7.0, 0.0, std::nan(""), std::nan(""), true}})[0]["xi"].is_null());
}
