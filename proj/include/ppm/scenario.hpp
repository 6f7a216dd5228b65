#pragma once

#include "ppm/dynamics.hpp"
#include "ppm/error.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ppm {

/// Every problem found while reading a scenario, each with its line/field context.
class ScenarioError : public ConfigError {
public:
    explicit ScenarioError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const { return errors_; }

private:
    std::vector<std::string> errors_;
};

enum class ModuliInput { BulkShear, YoungPoisson };

struct MaterialSpec {
    // Exactly one of intrinsic_density (with porosity) or partial_density.
    std::optional<double> intrinsic_density;
    std::optional<double> partial_density;
    double porosity = 0.0;
    ModuliInput moduli_input = ModuliInput::BulkShear;
    double modulus_a = 0.0;  // K or E
    double modulus_b = 0.0;  // G or nu
    DruckerPragerParams plasticity;
    bool yield_enabled = true;

    ElasticModuli moduli() const;
    double solid_partial_density() const;
};

struct GeometrySpec {
    Region region;
    std::vector<Polygon> eroded;
};

struct DiscretizationSpec {
    double spacing = 0.0;
    double horizon_ratio = 3.0;
    InfluenceKind influence = InfluenceKind::Constant;
    bool volume_correction = true;
};

enum class SnapshotField { Displacement, EpsPs, EpsPv, W2, MeanStress, Q };

const char* field_name(SnapshotField field);
std::vector<SnapshotField> all_snapshot_fields();

struct OutputSpec {
    std::string directory = "output";
    double interval = 0.0;              // snapshot cadence (s); 0 disables snapshots
    std::vector<SnapshotField> fields = all_snapshot_fields();
    std::optional<std::string> reaction;  // name of the prescribed-displacement condition
    std::optional<double> profile_bin;    // ground profile bin width; defaults to the spacing
    double log_interval = 0.0;            // run-log cadence (s); 0 logs at snapshots
    std::optional<double> checkpoint_every;
};

struct Scenario {
    std::string name;
    std::string description;
    std::optional<GeometrySpec> geometry;
    MaterialSpec material;
    DiscretizationSpec discretization;
    NewmarkConfig integrator;
    double damping = 0.0;
    double stabilization = 0.5;
    Vec2 gravity = Vec2::Zero();
    InitialStress initial;
    RelaxationConfig relaxation;
    std::vector<BoundaryCondition> conditions;
    std::optional<FrictionalBaseConfig> base;
    OutputSpec output;
};

/// Parse and validate a YAML scenario. Throws ScenarioError listing every problem.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

/// Emit a scenario that parse_scenario reads back to an equivalent value.
void write_scenario(std::ostream& os, const Scenario& scenario);

/// Discretize and assemble the model described by a scenario.
ModelSetup build_setup(const Scenario& scenario);

}  // namespace ppm
