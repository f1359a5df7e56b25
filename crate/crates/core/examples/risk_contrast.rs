//! Exact inference is risk-seeking, the variational solution is not.
//!
//! One decision: a sure reward of 1, or a coin flip between +10 and -10.

use maxent_control::exact::{backward_messages, message_ratio_policy};
use maxent_control::models::{risk, risk_mdp};
use maxent_control::soft::{extract_policy, soft_value_iteration};

fn main() {
    let mdp = risk_mdp();

    let messages = backward_messages(&mdp);
    let exact_q = messages.prior_normalized_q();
    let exact_pi = message_ratio_policy(&messages);

    let tables = soft_value_iteration(&mdp);
    let soft_q = tables.prior_normalized_q();
    let soft_pi = extract_policy(&tables);

    let s0 = risk::START;
    println!("{:<12} {:>10} {:>10} {:>12}", "", "Q(safe)", "Q(risky)", "pi(risky)");
    for (name, q, pi) in [("exact", &exact_q, &exact_pi), ("variational", &soft_q, &soft_pi)] {
        println!(
            "{:<12} {:>10.6} {:>10.6} {:>12.6}",
            name,
            q[0][s0][risk::SAFE],
            q[0][s0][risk::RISKY],
            pi.pi[0][s0][risk::RISKY]
        );
    }
    // log(0.5 e^10 + 0.5 e^-10): the optimistic backup "chooses" the jackpot
    println!("exact gamble value = {:.9}", (0.5 * 10f64.exp() + 0.5 * (-10f64).exp()).ln());
}
