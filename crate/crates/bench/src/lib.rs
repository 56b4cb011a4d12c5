//! Shared fixtures for the benchmarks.

use subradiance::units::{ghz_to_rad_per_ns, mhz_to_rad_per_ns};
use subradiance::{
    build_htc, drive_hamiltonian, dressed_single_excitation, CollapseSet, DeviceParams, DensityMatrix,
    DriveParams, Operator,
};

/// The reference two-qubit device driven on the ψ_s line, in the frame of
/// the drive.
pub struct Fixture {
    pub device: DeviceParams,
    pub driven: Operator,
    pub bare: Operator,
    pub collapses: CollapseSet,
    pub psi_a: DensityMatrix,
}

pub fn reference(n_max: usize) -> Fixture {
    let device = DeviceParams::reference_sample().with_n_max(n_max);
    let layout = device.layout().expect("layout");
    let dressed = dressed_single_excitation(&device).expect("dressed states");
    let drive = DriveParams::new(mhz_to_rad_per_ns(0.05), 1.0, 0.0, dressed.omega_s).expect("drive");
    let bare = subradiance::model::rotating_frame(&build_htc(&layout, &device).expect("htc"), ghz_to_rad_per_ns(6.647));
    let driven = subradiance::model::rotating_frame(
        &(&build_htc(&layout, &device).expect("htc") + &drive_hamiltonian(&layout, &drive).expect("drive")),
        dressed.omega_s,
    );
    let collapses = CollapseSet::from_device(&device, &layout).expect("collapses");
    let psi_a = DensityMatrix::pure(&dressed.psi_a).expect("state");
    Fixture { device, driven, bare, collapses, psi_a }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_builds_for_each_truncation() {
        for n in [2, 3, 5] {
            let f = reference(n);
            assert_eq!(f.driven.dim(), (n + 1) * 4);
            assert_eq!(f.collapses.len(), 5);
        }
    }
}
