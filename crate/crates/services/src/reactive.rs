//! Services that recompute an attribute layer on every change.

use redsys_core::{Changeset, Document};
use redsys_sdk::{Context, Service, SubmitResult};

/// An attribute-only view of the document that a service maintains.
pub trait Layer: Send + 'static {
    /// The changeset that brings the layer on `doc` up to date; the identity
    /// when nothing changed.
    fn recompute(&mut self, doc: &Document) -> Changeset;
}

/// Runs a [`Layer`] with at most one submit in flight. Changes that arrive
/// meanwhile are folded into the next recomputation.
pub struct Reactive<L> {
    layer: L,
    in_flight: bool,
    dirty: bool,
}

impl<L: Layer> Reactive<L> {
    pub fn new(layer: L) -> Self {
        Reactive {
            layer,
            in_flight: false,
            dirty: false,
        }
    }

    fn run(&mut self, ctx: &mut Context<'_>) {
        self.dirty = false;
        let cs = self.layer.recompute(ctx.doc());
        if !cs.is_identity() {
            ctx.submit(cs);
            self.in_flight = true;
        }
    }

    fn changed(&mut self, ctx: &mut Context<'_>) {
        if self.in_flight {
            self.dirty = true;
        } else {
            self.run(ctx);
        }
    }
}

impl<L: Layer> Service for Reactive<L> {
    fn on_init(&mut self, ctx: &mut Context<'_>) {
        self.in_flight = false;
        self.run(ctx);
    }

    fn on_update(&mut self, ctx: &mut Context<'_>, _cs: &Changeset, _author: &str) {
        self.changed(ctx);
    }

    fn on_submit_result(&mut self, ctx: &mut Context<'_>, result: &SubmitResult) {
        self.in_flight = false;
        if self.dirty || matches!(result, SubmitResult::Rejected { .. }) {
            self.run(ctx);
        }
    }
}
