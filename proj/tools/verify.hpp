#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace ppm::verify {

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SuiteResult {
    std::string name;
    std::vector<Check> checks;
    double seconds = 0.0;

    bool passed() const;
};

/// Nonlocal F reproduces random affine maps at every point of a lattice.
SuiteResult affine_exactness(int maps = 50);
/// Return mapping against an independent sub-stepped integration of the flow.
SuiteResult return_mapping(int states = 100, int substeps = 1000);
/// Free fall, two-point chain frequency convergence and the stability guard.
SuiteResult integrator();
/// Uniform-stress nullity, momentum conservation and rotation conjugation.
SuiteResult equilibrium_objectivity();
/// Checkerboard mode is invisible to the correspondence force but not to stabilization.
SuiteResult zero_energy_mode();

std::vector<std::function<SuiteResult()>> all_suites();

void print_table(std::ostream& os, const std::vector<SuiteResult>& results);

}  // namespace ppm::verify
