//! First-order radio energy model.
//!
//! Transmitting `k` bits over `d` meters costs `e_elec * k + eps_amp * k * d^2`;
//! receiving costs `e_elec * k`. The path loss exponent is fixed at 2 (free space).

use crate::config::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioModel {
    /// Electronics energy per bit, for both transmit and receive.
    pub e_elec_j_per_bit: f64,
    /// Amplifier energy per bit per square meter.
    pub eps_amp_j_per_bit_m2: f64,
}

impl Default for RadioModel {
    fn default() -> Self {
        RadioModel {
            e_elec_j_per_bit: 50e-9,
            eps_amp_j_per_bit_m2: 100e-12,
        }
    }
}

impl RadioModel {
    pub const PATH_LOSS_EXPONENT: i32 = 2;

    pub fn tx_cost(&self, bits: u64, distance_m: f64) -> f64 {
        debug_assert!(bits > 0 && distance_m >= 0.0);
        let k = bits as f64;
        self.e_elec_j_per_bit * k
            + self.eps_amp_j_per_bit_m2 * k * distance_m.powi(Self::PATH_LOSS_EXPONENT)
    }

    pub fn rx_cost(&self, bits: u64) -> f64 {
        debug_assert!(bits > 0);
        self.e_elec_j_per_bit * bits as f64
    }

    /// Energy of one full ADV/REQ/DATA exchange across a hop of length `distance_m`.
    ///
    /// The sender transmits ADV, receives REQ and transmits DATA; the receiver
    /// receives ADV, transmits REQ and receives DATA.
    pub fn hop_transaction_cost(&self, distance_m: f64, config: &SimConfig) -> HopCost {
        let control = config.control_packet_bits;
        let data = config.data_packet_bits;
        HopCost {
            sender_j: self.tx_cost(control, distance_m)
                + self.rx_cost(control)
                + self.tx_cost(data, distance_m),
            receiver_j: self.rx_cost(control)
                + self.tx_cost(control, distance_m)
                + self.rx_cost(data),
        }
    }

    /// Cost of an ADV that is answered with nothing because the receiver already holds the data.
    pub fn adv_leg_cost(&self, distance_m: f64, config: &SimConfig) -> HopCost {
        let control = config.control_packet_bits;
        HopCost {
            sender_j: self.tx_cost(control, distance_m),
            receiver_j: self.rx_cost(control),
        }
    }
}

/// Per-party energy of one hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopCost {
    pub sender_j: f64,
    pub receiver_j: f64,
}

impl HopCost {
    pub fn total(&self) -> f64 {
        self.sender_j + self.receiver_j
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1e-300)
    }

    #[test]
    fn tx_examples() {
        let m = RadioModel::default();
        assert!(close(m.tx_cost(2000, 10.0), 1.2e-4));
        assert!(close(m.tx_cost(2000, 100.0), 2.1e-3));
        assert_eq!(m.tx_cost(777, 0.0), 777.0 * 50e-9);
    }

    #[test]
    fn rx_examples() {
        let m = RadioModel::default();
        assert!(close(m.rx_cost(248), 1.24e-5));
        assert!(close(m.rx_cost(2000), 1.0e-4));
    }

    #[test]
    fn hop_transaction_examples() {
        let m = RadioModel::default();
        let c = SimConfig::default();
        let h = m.hop_transaction_cost(15.0, &c);
        assert!(close(h.sender_j, 1.7538e-4), "{}", h.sender_j);
        assert!(close(h.receiver_j, 1.3038e-4), "{}", h.receiver_j);

        let z = m.hop_transaction_cost(0.0, &c);
        let expect = 50e-9 * (2.0 * 248.0 + 2000.0);
        assert!(close(z.sender_j, expect) && close(z.receiver_j, expect));

        let bs = m.hop_transaction_cost(100.0, &c);
        assert!(close(bs.sender_j, 2.3728e-3), "{}", bs.sender_j);
    }

    proptest! {
        #[test]
        fn tx_monotone(bits in 1u64..10_000, extra in 0u64..1000, d in 0.0f64..500.0, dd in 0.0f64..100.0) {
            let m = RadioModel::default();
            prop_assert!(m.tx_cost(bits, d) <= m.tx_cost(bits, d + dd));
            prop_assert!(m.tx_cost(bits, d) <= m.tx_cost(bits + extra, d));
            prop_assert!(m.rx_cost(bits) <= m.rx_cost(bits + extra));
        }

        // Independent re-derivation: electronics for every bit sent or received
        // plus amplifier terms for the two transmissions.
        #[test]
        fn sender_receiver_split(d in 0.0f64..200.0, control in 1u64..4096, data in 1u64..65_536) {
            let m = RadioModel::default();
            let c = SimConfig { control_packet_bits: control, data_packet_bits: data, ..SimConfig::default() };
            let h = m.hop_transaction_cost(d, &c);
            let (k_ctl, k_data) = (control as f64, data as f64);
            let electronics = 2.0 * (2.0 * k_ctl + k_data) * 50e-9;
            let amplifier = (k_ctl + k_data) * 100e-12 * d * d + k_ctl * 100e-12 * d * d;
            let expected = electronics + amplifier;
            prop_assert!((h.total() - expected).abs() <= 1e-12 * expected);
        }
    }
}
