pub mod checks;
pub mod fig1;
pub mod fig2;
pub mod fig34;
pub mod fig5;
pub mod instability;
pub mod pieces;
pub mod train;

pub use checks::{run_checks, ChecksConfig, ChecksRow};
pub use fig1::{run_fig1, Fig1Config, Fig1Report};
pub use fig2::{run_fig2, Fig2Config, Fig2Report};
pub use fig34::{run_fig34, Fig34Config, Fig34Report};
pub use fig5::{run_fig5, Fig5Config, Fig5Report, Fig5Summary};
pub use instability::{run_instability, InstabilityConfig, InstabilityReport, UnstableCase};
pub use pieces::{run_pieces, PiecesConfig, PiecesRow};
pub use train::{run_train, InitScheme, TrainConfig, TrainReport};
