#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "emgrip/errors.hpp"

namespace emgrip {

inline constexpr double kGripperMaxForceN = 20.0;

// mm of aperture command per newton of force error.
struct AdmittanceGains {
    double kp = 0.1;
    double kd = 0.002;
};

struct ApertureLimits {
    double min_mm = 0.0;
    double max_mm = 100.0;
};

struct ControllerState {
    double aperture_cmd_mm = 0.0;
    double prev_error_n = 0.0;
};

// Simulated object: series-elastic contact plus failure thresholds.
// Thresholds are simulation parameters calibrated so that realistic
// reference forces sit inside [min_hold_force, deform_force).
struct ObjectSpec {
    std::string name;
    double contact_stiffness_n_mm = 1.0;
    double contact_damping_ns_mm = 0.0;
    double break_force_n = 1.0;
    double deform_force_n = 1.0;
    double min_hold_force_n = 0.1;
    double free_aperture_mm = 50.0;

    void validate() const;
};

struct PlantState {
    double aperture_mm = 0.0;
    double velocity_mm_s = 0.0;
    double contact_force_n = 0.0;
    bool deformed = false;
    bool broken = false;
};

enum class GraspResult { Success, Crushed, Deformed, Slipped, Timeout };
const char* to_string(GraspResult result);

struct GraspSample {
    double t_s;
    double f_ref_n;
    double f_real_n;
    double aperture_cmd_mm;
    double aperture_mm;
    bool deformed;
    bool broken;
};

struct GraspTrace {
    std::vector<GraspSample> samples;
};

struct GraspOutcome {
    GraspResult result = GraspResult::Timeout;
    double final_ref_n = 0.0;
    double final_real_n = 0.0;
    double percent_of_max = 0.0;
    double t_end_s = 0.0;
};

// Rotation from the sensor frame to the world frame. Construction rejects
// matrices that are not proper rotations.
class FrameTransform {
public:
    FrameTransform();  // identity
    explicit FrameTransform(const std::array<std::array<double, 3>, 3>& rotation);

    static FrameTransform rotation_z(double angle_rad);

    std::array<double, 3> apply(const std::array<double, 3>& f_scf) const;
    const std::array<std::array<double, 3>, 3>& matrix() const { return r_; }

private:
    std::array<std::array<double, 3>, 3> r_;
};

std::array<double, 3> transform_force(const FrameTransform& t, const std::array<double, 3>& f_scf);

struct SimConfig {
    double outer_rate_hz = 20.0;    // admittance update rate
    double inner_rate_hz = 1000.0;  // plant integration rate
    double inner_tau_s = 0.05;      // first-order lag of the position loop;
                                    // <= 0 means instantaneous
    double success_threshold_n = 0.01;
    double dwell_s = 0.25;          // how long |e| must stay below threshold
    double horizon_s = 15.0;
    ApertureLimits limits;
    FrameTransform sensor_to_world;
};

// One outer-loop tick of Eq.-style incremental force tracking:
//   e = F_ref - F_real, dP = kp*e + kd*(e - e_prev)
// Positive dP closes the gripper (reduces aperture, raises contact force).
// The command is clamped to the aperture limits.
void admittance_step(const AdmittanceGains& gains, double f_ref_n, double f_real_n,
                     ControllerState& state, const ApertureLimits& limits);

// Inner position loop as a first-order lag toward p_cmd, then series-elastic
// contact: F = k * penetration + c * closing-rate while penetrating, never
// negative. Break/deform flags latch.
void plant_step(PlantState& plant, double p_cmd_mm, const ObjectSpec& object, double dt_s,
                double tau_s);

// Force reference sampled at outer-loop ticks (zero-order hold).
using ReferenceSource = std::function<double(double t_s)>;

ReferenceSource plateau_reference(double force_n);

// Closed loop: outer admittance at 20 Hz, inner plant at 1 kHz. Lift is
// attempted once |F_ref - F_real| stays below the threshold for the dwell;
// Success needs the object intact and F_real >= min_hold_force.
std::pair<GraspTrace, GraspOutcome> run_grasp(const ObjectSpec& object,
                                              const ReferenceSource& refs,
                                              const AdmittanceGains& gains,
                                              const SimConfig& sim = {});

// 100 * F / 20 N (the gripper's maximum force).
double percent_of_max(double force_n);

// The eight benchmark objects with calibrated contact parameters.
std::vector<ObjectSpec> builtin_objects();
const ObjectSpec& find_object(const std::vector<ObjectSpec>& objects, const std::string& name);

// Reference force per benchmark object for the grasp report.
struct GraspBenchmarkCase {
    std::string object;
    double reference_n;
};
std::vector<GraspBenchmarkCase> benchmark_cases();

// key=value file with one [name] section per object.
std::vector<ObjectSpec> load_objects(const std::string& path);

void save_trace(const std::string& path, const GraspTrace& trace);

}  // namespace emgrip
