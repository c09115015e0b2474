use crate::instance::{AgentSpec, Location, MissionInstance, SpeedModel, Task};

/// Single agent at the origin; tasks on the x axis as `(x, ready, due, service)`.
pub fn line_instance(tasks: &[(f64, f64, f64, f64)], variance: f64) -> MissionInstance {
    line_fleet(tasks, &[0.0], 4, variance)
}

/// Agents starting at `(x, 0)` for each entry of `starts`, all with `capacity`.
pub fn line_fleet(tasks: &[(f64, f64, f64, f64)], starts: &[f64], capacity: usize, variance: f64) -> MissionInstance {
    let horizon = 480.0;
    MissionInstance {
        horizon,
        depot: Location::new(starts[0], 0.0),
        tasks: tasks
            .iter()
            .enumerate()
            .map(|(id, &(x, ready, due, service))| Task {
                id,
                location: Location::new(x, 0.0),
                price: 1.0,
                ready_time: ready,
                due_time: due,
                service_duration: service,
                windowed: !(ready == 0.0 && due == horizon),
            })
            .collect(),
        agents: starts
            .iter()
            .enumerate()
            .map(|(id, &x)| AgentSpec {
                id,
                start: Location::new(x, 0.0),
                capacity,
                speed: SpeedModel::new(1.0, variance),
            })
            .collect(),
        penalty: 1.0,
        seed: 0,
    }
}
