//! The chain I(X;Y) <= I(I;O) <= sum_t I(I_t;O_t) <= n I(T, k), evaluated exactly on random instances.

use seplab::capacity::{random_chain_instance, verify_single_letterization};

fn main() -> seplab::Result<()> {
    for i in 0..8 {
        let inst = random_chain_instance(42, i, 3);
        let r = verify_single_letterization(&inst.encoder, &inst.decoder, &inst.kernel, &inst.p_x, inst.n)?;
        println!(
            "n = {}: {:.4} <= {:.4} <= {:.4} <= {:.4}  holds: {}",
            inst.n, r.i_source, r.i_channel_blocks, r.sum_letter_information, r.n_times_i_t, r.holds
        );
    }
    Ok(())
}
