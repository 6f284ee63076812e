"""Computer-generated hologram generation."""
