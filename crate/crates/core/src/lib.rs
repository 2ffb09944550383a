pub mod analytics;
pub mod bits;
pub mod channel;
pub mod postproc;
pub mod protocols;
pub mod qstate;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/states.md")]
    pub mod states {}
    #[doc = include_str!("../../../book/src/protocols.md")]
    pub mod protocols {}
    #[doc = include_str!("../../../book/src/channel.md")]
    pub mod channel {}
    #[doc = include_str!("../../../book/src/postproc.md")]
    pub mod postproc {}
    #[doc = include_str!("../../../book/src/rates.md")]
    pub mod rates {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
    #[doc = include_str!("../../../book/src/transcript.md")]
    pub mod transcript {}
}
