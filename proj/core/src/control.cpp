#include "emgrip/control.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "emgrip/csv.hpp"

namespace emgrip {

void ObjectSpec::validate() const {
    if (!(contact_stiffness_n_mm > 0.0)) throw ConfigError(name + ": stiffness must be positive");
    if (contact_damping_ns_mm < 0.0) throw ConfigError(name + ": damping must be nonnegative");
    if (!(min_hold_force_n > 0.0) || min_hold_force_n > deform_force_n ||
        deform_force_n > break_force_n) {
        throw ConfigError(name + ": need 0 < min_hold <= deform_force <= break_force");
    }
    if (!(free_aperture_mm > 0.0)) throw ConfigError(name + ": free aperture must be positive");
}

const char* to_string(GraspResult result) {
    switch (result) {
        case GraspResult::Success: return "Success";
        case GraspResult::Crushed: return "Crushed";
        case GraspResult::Deformed: return "Deformed";
        case GraspResult::Slipped: return "Slipped";
        case GraspResult::Timeout: return "Timeout";
    }
    return "Timeout";
}

FrameTransform::FrameTransform()
    : r_{{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}} {}

FrameTransform::FrameTransform(const std::array<std::array<double, 3>, 3>& rotation) : r_(rotation) {
    // R^T R = I within 1e-9 and det R = +1: a proper rotation.
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double dot = 0.0;
            for (int k = 0; k < 3; ++k) dot += r_[k][i] * r_[k][j];
            const double expected = (i == j) ? 1.0 : 0.0;
            if (std::abs(dot - expected) > 1e-9) {
                throw ConfigError("frame transform is not orthonormal");
            }
        }
    }
    const double det = r_[0][0] * (r_[1][1] * r_[2][2] - r_[1][2] * r_[2][1]) -
                       r_[0][1] * (r_[1][0] * r_[2][2] - r_[1][2] * r_[2][0]) +
                       r_[0][2] * (r_[1][0] * r_[2][1] - r_[1][1] * r_[2][0]);
    if (std::abs(det - 1.0) > 1e-9) throw ConfigError("frame transform must have det +1");
}

FrameTransform FrameTransform::rotation_z(double angle_rad) {
    const double c = std::cos(angle_rad);
    const double s = std::sin(angle_rad);
    return FrameTransform({{{c, -s, 0.0}, {s, c, 0.0}, {0.0, 0.0, 1.0}}});
}

std::array<double, 3> FrameTransform::apply(const std::array<double, 3>& f_scf) const {
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i) {
        out[i] = r_[i][0] * f_scf[0] + r_[i][1] * f_scf[1] + r_[i][2] * f_scf[2];
    }
    return out;
}

std::array<double, 3> transform_force(const FrameTransform& t, const std::array<double, 3>& f_scf) {
    return t.apply(f_scf);
}

void admittance_step(const AdmittanceGains& gains, double f_ref_n, double f_real_n,
                     ControllerState& state, const ApertureLimits& limits) {
    const double e = f_ref_n - f_real_n;
    const double de = e - state.prev_error_n;
    const double dp = gains.kp * e + gains.kd * de;
    // Positive force error closes the gripper; aperture shrinks.
    state.aperture_cmd_mm = std::clamp(state.aperture_cmd_mm - dp, limits.min_mm, limits.max_mm);
    state.prev_error_n = e;
}

void plant_step(PlantState& plant, double p_cmd_mm, const ObjectSpec& object, double dt_s,
                double tau_s) {
    if (!(dt_s > 0.0)) throw ArgumentError("plant step needs dt > 0");
    const double p_prev = plant.aperture_mm;
    double p_new;
    if (tau_s <= 0.0) {
        p_new = p_cmd_mm;  // idealized inner loop
    } else {
        p_new = p_prev + (p_cmd_mm - p_prev) * (1.0 - std::exp(-dt_s / tau_s));
    }
    plant.aperture_mm = p_new;
    plant.velocity_mm_s = (p_new - p_prev) / dt_s;

    const double penetration = object.free_aperture_mm - p_new;
    if (penetration > 0.0) {
        const double closing_rate = std::max(0.0, -plant.velocity_mm_s);
        const double f = object.contact_stiffness_n_mm * penetration +
                         object.contact_damping_ns_mm * closing_rate;
        plant.contact_force_n = std::max(0.0, f);
    } else {
        plant.contact_force_n = 0.0;
    }

    if (plant.contact_force_n >= object.break_force_n) plant.broken = true;
    if (plant.contact_force_n >= object.deform_force_n) plant.deformed = true;
}

ReferenceSource plateau_reference(double force_n) {
    return [force_n](double) { return force_n; };
}

std::pair<GraspTrace, GraspOutcome> run_grasp(const ObjectSpec& object,
                                              const ReferenceSource& refs,
                                              const AdmittanceGains& gains,
                                              const SimConfig& sim) {
    object.validate();

    const double outer_dt = 1.0 / sim.outer_rate_hz;
    const double inner_dt = 1.0 / sim.inner_rate_hz;
    const std::size_t inner_per_outer = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(sim.outer_rate_hz > 0.0
                                                     ? sim.inner_rate_hz / sim.outer_rate_hz
                                                     : 1.0)));

    // Gripper starts at first contact: zero force, zero penetration.
    PlantState plant;
    plant.aperture_mm = object.free_aperture_mm;
    ControllerState ctrl;
    ctrl.aperture_cmd_mm = object.free_aperture_mm;

    GraspTrace trace;
    GraspOutcome outcome;
    double t = 0.0;
    double dwell = 0.0;
    double f_ref = 0.0;

    auto measured_force = [&]() {
        // The sensor reports along its own z axis; rotate into the world
        // frame before the controller consumes the normal magnitude.
        const std::array<double, 3> f_scf{0.0, 0.0, plant.contact_force_n};
        const std::array<double, 3> f_wcf = sim.sensor_to_world.apply(f_scf);
        return std::sqrt(f_wcf[0] * f_wcf[0] + f_wcf[1] * f_wcf[1] + f_wcf[2] * f_wcf[2]);
    };

    auto finish = [&](GraspResult result) {
        outcome.result = result;
        outcome.final_ref_n = f_ref;
        outcome.final_real_n = plant.contact_force_n;
        outcome.percent_of_max = percent_of_max(plant.contact_force_n);
        outcome.t_end_s = t;
        return std::make_pair(std::move(trace), outcome);
    };

    while (t < sim.horizon_s) {
        f_ref = refs(t);
        const double f_real = measured_force();
        admittance_step(gains, f_ref, f_real, ctrl, sim.limits);

        for (std::size_t i = 0; i < inner_per_outer; ++i) {
            plant_step(plant, ctrl.aperture_cmd_mm, object, inner_dt, sim.inner_tau_s);
            t += inner_dt;
            trace.samples.push_back({t, f_ref, plant.contact_force_n, ctrl.aperture_cmd_mm,
                                     plant.aperture_mm, plant.deformed, plant.broken});
            if (plant.broken) return finish(GraspResult::Crushed);
        }

        if (std::abs(f_ref - plant.contact_force_n) < sim.success_threshold_n) {
            dwell += outer_dt;
        } else {
            dwell = 0.0;
        }
        if (dwell >= sim.dwell_s) {
            // Lift attempt.
            if (plant.deformed) return finish(GraspResult::Deformed);
            if (plant.contact_force_n >= object.min_hold_force_n) {
                return finish(GraspResult::Success);
            }
            return finish(GraspResult::Slipped);
        }
    }
    return finish(plant.deformed ? GraspResult::Deformed : GraspResult::Timeout);
}

double percent_of_max(double force_n) {
    if (force_n < 0.0) throw ArgumentError("force must be nonnegative");
    return 100.0 * force_n / kGripperMaxForceN;
}

std::vector<ObjectSpec> builtin_objects() {
    // Contact parameters are simulation calibration, chosen so the
    // benchmark reference forces sit inside [min_hold, deform) and all
    // stiffnesses stay inside the admittance stability region (< 20 N/mm).
    return {
        {"pepper", 3.0, 0.0, 3.5, 2.0, 0.5, 60.0},
        {"tomato", 1.5, 0.0, 0.8, 0.5, 0.1, 70.0},
        {"wine_glass", 8.0, 0.005, 12.0, 8.0, 2.0, 75.0},
        {"aluminum_can", 2.0, 0.0, 0.9, 0.45, 0.1, 66.0},
        {"thin_glass", 6.0, 0.0, 2.5, 1.5, 0.3, 40.0},
        {"strawberry", 2.0, 0.0, 0.25, 0.12, 0.015, 30.0},
        {"bottle", 5.0, 0.005, 15.0, 10.0, 3.0, 65.0},
        {"eggshell", 2.0, 0.0, 0.05, 0.03, 0.004, 45.0},
    };
}

std::vector<GraspBenchmarkCase> benchmark_cases() {
    return {
        {"pepper", 1.140},  {"tomato", 0.239},     {"wine_glass", 5.932},
        {"aluminum_can", 0.216}, {"thin_glass", 0.826}, {"strawberry", 0.039},
        {"bottle", 6.770},  {"eggshell", 0.010},
    };
}

const ObjectSpec& find_object(const std::vector<ObjectSpec>& objects, const std::string& name) {
    for (const auto& obj : objects) {
        if (obj.name == name) return obj;
    }
    throw ArgumentError("unknown object '" + name + "'");
}

std::vector<ObjectSpec> load_objects(const std::string& path) {
    const std::vector<std::string> lines = csv::split_lines(csv::read_file(path));
    std::vector<ObjectSpec> objects;
    ObjectSpec current;
    bool in_section = false;

    auto flush = [&]() {
        if (in_section) {
            current.validate();
            objects.push_back(current);
        }
    };

    for (std::size_t li = 0; li < lines.size(); ++li) {
        std::string line = lines[li];
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        line = line.substr(start);

        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ParseError("line " + std::to_string(li + 1) + ": unterminated section");
            }
            flush();
            current = ObjectSpec{};
            current.name = line.substr(1, line.size() - 2);
            in_section = true;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos || !in_section) {
            throw ParseError("line " + std::to_string(li + 1) + ": expected key=value");
        }
        const std::string key = line.substr(0, eq);
        const double value = csv::parse_double(line.substr(eq + 1), li + 1);
        if (key == "contact_stiffness") current.contact_stiffness_n_mm = value;
        else if (key == "contact_damping") current.contact_damping_ns_mm = value;
        else if (key == "break_force") current.break_force_n = value;
        else if (key == "deform_force") current.deform_force_n = value;
        else if (key == "min_hold_force") current.min_hold_force_n = value;
        else if (key == "free_aperture") current.free_aperture_mm = value;
        else throw ParseError("line " + std::to_string(li + 1) + ": unknown key '" + key + "'");
    }
    flush();
    if (objects.empty()) throw ParseError("'" + path + "' defines no objects");
    return objects;
}

void save_trace(const std::string& path, const GraspTrace& trace) {
    std::ostringstream out;
    out << "t_s,f_ref_n,f_real_n,aperture_cmd_mm,aperture_mm,deformed,broken\n";
    for (const auto& s : trace.samples) {
        out << csv::format_double_compact(s.t_s) << ',' << csv::format_double_compact(s.f_ref_n)
            << ',' << csv::format_double_compact(s.f_real_n) << ','
            << csv::format_double_compact(s.aperture_cmd_mm) << ','
            << csv::format_double_compact(s.aperture_mm) << ',' << (s.deformed ? 1 : 0) << ','
            << (s.broken ? 1 : 0) << '\n';
    }
    csv::write_file(path, out.str());
}

}  // namespace emgrip
