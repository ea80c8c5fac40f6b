// Training churns through many large, short-lived tensors; the system
// allocator returns them to the kernel and pays page faults on every reuse.
#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

fn main() -> std::process::ExitCode {
    bnqa::interface::run()
}
